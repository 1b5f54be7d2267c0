#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fable/errors.hpp"
#include "fable/instruction_map.hpp"
#include "fable/outline_dsl.hpp"

namespace fable {

/// Short user-supplied description of the story's high-level premise.
struct Premise {
  std::string text;

  /// Trims surrounding whitespace; rejects empty results and texts longer
  /// than 500 characters.
  static Premise make(std::string_view raw);

  friend bool operator==(const Premise&, const Premise&) = default;
};

enum class Role { System, User, Assistant };

std::string_view role_name(Role role);
Role role_from_name(std::string_view name);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct GenerationParams {
  std::string model_id;
  double temperature = 1.0;  // must stay within [0, 2]
  int max_output_tokens = 400;
  std::chrono::milliseconds request_timeout{30'000};
  int max_retries = 3;
  std::optional<std::int64_t> seed;
};

enum class StoryCondition { Guided, Unguided };

std::string_view condition_name(StoryCondition condition);
StoryCondition condition_from_name(std::string_view name);

struct StoryMetadata {
  std::string model_id;
  std::string provider;
  std::string started_at;
  std::string finished_at;
  GenerationParams params;
};

/// A generated story. Guided stories carry their outline and have exactly
/// one paragraph per scene; unguided stories have no outline.
struct Story {
  Premise premise;
  StoryCondition condition = StoryCondition::Unguided;
  std::optional<Outline> outline;
  std::vector<std::string> paragraphs;
  StoryMetadata metadata;
};

/// Timestamp source for story metadata. The fixed clock keeps archives
/// byte-reproducible when generation itself is deterministic.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::string now_iso8601() const = 0;
};

class SystemClock final : public Clock {
 public:
  std::string now_iso8601() const override;
};

class FixedClock final : public Clock {
 public:
  explicit FixedClock(std::string timestamp = "1970-01-01T00:00:00Z")
      : timestamp_(std::move(timestamp)) {}
  std::string now_iso8601() const override { return timestamp_; }

 private:
  std::string timestamp_;
};

// Prompt templates. These strings are pinned byte-for-byte by golden tests;
// do not reword them.
inline constexpr std::string_view kSystemPrompt =
    "You are a fiction writer. Write vivid, coherent fiction one paragraph at a time, "
    "continuing the story so far.";

/// "You're writing a story about: {premise}. Write the first paragraph of
/// the story." plus, when an instruction is given, " In this paragraph,
/// {instruction}." One trailing period is stripped from the instruction
/// before substitution so the sentence ends with a single period.
std::string render_first_prompt(const Premise& premise,
                                const std::optional<std::string>& instruction);

/// "Write the next paragraph of the story. Remember the story is about:
/// {premise}." plus the same optional instruction clause as above.
std::string render_next_prompt(const Premise& premise,
                               const std::optional<std::string>& instruction);

/// Chat-completion provider interface. Implementations must be safely
/// shareable across concurrently generated stories.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  /// History must be nonempty and begin with the system message; returns the
  /// assistant's reply text. Throws ProviderError on failure.
  virtual std::string complete(const std::vector<ChatMessage>& history,
                               const GenerationParams& params) = 0;

  virtual std::string name() const = 0;

  /// True when identical inputs always produce identical replies.
  virtual bool deterministic() const { return false; }
};

/// Offline test double. The reply is synthesized purely from a hash of the
/// final user message: it always contains the premise text, plus the
/// distinctive keywords of the instruction clause when one is present
/// (baseline prompts contribute no keywords).
class MockChatProvider final : public ChatProvider {
 public:
  std::string complete(const std::vector<ChatMessage>& history,
                       const GenerationParams& params) override;
  std::string name() const override { return "mock"; }
  bool deterministic() const override { return true; }

  /// Lowercased words of the text, minus stopwords and words shorter than
  /// four characters; first-occurrence order, capped at eight.
  static std::vector<std::string> extract_keywords(std::string_view text);
};

struct HttpChatConfig {
  std::string endpoint;  // full URL of the chat-completions resource
  std::string api_key;   // sent as "Authorization: Bearer <key>" when nonempty
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
};

/// Client for any endpoint speaking the chat-completions JSON format:
/// request {model, messages, temperature, max_tokens}, reply
/// choices[0].message.content. Transient failures (transport errors and
/// HTTP 408/409/429/5xx) are retried with exponential backoff up to
/// params.max_retries.
class HttpChatProvider final : public ChatProvider {
 public:
  explicit HttpChatProvider(HttpChatConfig config);

  std::string complete(const std::vector<ChatMessage>& history,
                       const GenerationParams& params) override;
  std::string name() const override { return "http"; }

 private:
  HttpChatConfig config_;
};

/// Expand a premise and outline into a guided story, one paragraph per
/// scene. The conversation history starts with the system prompt and grows
/// by one user/assistant pair per scene; replies are whitespace-trimmed and
/// internal blank lines collapsed before being recorded. On provider
/// failure, throws StoryGenerationError carrying the paragraphs completed so
/// far.
Story write_story(const Premise& premise, const Outline& outline, const InstructionMap& map,
                  ChatProvider& provider, const GenerationParams& params,
                  const Clock& clock = SystemClock{});

/// The unguided baseline: identical prompt chaining with no instruction
/// clauses.
Story write_story_unguided(const Premise& premise, int n_paragraphs, ChatProvider& provider,
                           const GenerationParams& params, const Clock& clock = SystemClock{});

}  // namespace fable
