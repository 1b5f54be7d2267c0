#include "fable/story_writer.hpp"

#include <cctype>
#include <ctime>
#include <random>
#include <unordered_set>

#include "fable/hashing.hpp"

namespace fable {

namespace {

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

// One scene, one paragraph: a multi-paragraph completion is flattened by
// turning every newline-bearing whitespace run into a single space.
std::string collapse_paragraph(std::string_view reply) {
  const std::string trimmed = trim(reply);
  std::string out;
  out.reserve(trimmed.size());
  std::size_t i = 0;
  while (i < trimmed.size()) {
    if (std::isspace(static_cast<unsigned char>(trimmed[i]))) {
      std::size_t j = i;
      bool has_newline = false;
      while (j < trimmed.size() && std::isspace(static_cast<unsigned char>(trimmed[j]))) {
        if (trimmed[j] == '\n') has_newline = true;
        ++j;
      }
      if (has_newline) {
        out += ' ';
      } else {
        out.append(trimmed, i, j - i);
      }
      i = j;
    } else {
      out += trimmed[i];
      ++i;
    }
  }
  return out;
}

// The instruction clause supplies its own terminal period; strip one from
// the instruction so it is not doubled.
std::string normalize_instruction(std::string_view instruction) {
  std::string text = trim(instruction);
  if (!text.empty() && text.back() == '.') text.pop_back();
  return text;
}

void validate_params(const GenerationParams& params) {
  if (params.temperature < 0.0 || params.temperature > 2.0) {
    throw Error("temperature must be within [0, 2]");
  }
  if (params.max_output_tokens < 1) throw Error("max_output_tokens must be positive");
  if (params.max_retries < 0) throw Error("max_retries must be >= 0");
}

}  // namespace

Premise Premise::make(std::string_view raw) {
  Premise p{trim(raw)};
  if (p.text.empty()) throw Error("premise must be nonempty");
  if (p.text.size() > 500) throw Error("premise must be at most 500 characters");
  return p;
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "?";
}

Role role_from_name(std::string_view name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  throw Error("unknown chat role '" + std::string(name) + "'");
}

std::string_view condition_name(StoryCondition condition) {
  return condition == StoryCondition::Guided ? "guided" : "unguided";
}

StoryCondition condition_from_name(std::string_view name) {
  if (name == "guided") return StoryCondition::Guided;
  if (name == "unguided") return StoryCondition::Unguided;
  throw Error("unknown story condition '" + std::string(name) + "'");
}

std::string SystemClock::now_iso8601() const {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

std::string render_first_prompt(const Premise& premise,
                                const std::optional<std::string>& instruction) {
  std::string prompt =
      "You're writing a story about: " + premise.text + ". Write the first paragraph of the story.";
  if (instruction) {
    prompt += " In this paragraph, " + normalize_instruction(*instruction) + ".";
  }
  return prompt;
}

std::string render_next_prompt(const Premise& premise,
                               const std::optional<std::string>& instruction) {
  std::string prompt =
      "Write the next paragraph of the story. Remember the story is about: " + premise.text + ".";
  if (instruction) {
    prompt += " In this paragraph, " + normalize_instruction(*instruction) + ".";
  }
  return prompt;
}

// ---------------------------------------------------------------------------
// Mock provider
// ---------------------------------------------------------------------------

namespace {

struct ParsedPrompt {
  std::string premise;
  std::optional<std::string> instruction;
};

constexpr std::string_view kFirstPrefix = "You're writing a story about: ";
constexpr std::string_view kFirstMarker = ". Write the first paragraph of the story.";
constexpr std::string_view kNextPrefix =
    "Write the next paragraph of the story. Remember the story is about: ";
constexpr std::string_view kInstructionClause = " In this paragraph, ";
constexpr std::string_view kNextInstructionMarker = ". In this paragraph, ";

std::string strip_trailing_period(std::string text) {
  if (!text.empty() && text.back() == '.') text.pop_back();
  return text;
}

std::optional<ParsedPrompt> parse_pipeline_prompt(const std::string& message) {
  ParsedPrompt parsed;
  if (message.starts_with(kFirstPrefix)) {
    const std::size_t marker = message.find(kFirstMarker, kFirstPrefix.size());
    if (marker == std::string::npos) return std::nullopt;
    parsed.premise = message.substr(kFirstPrefix.size(), marker - kFirstPrefix.size());
    const std::string rest = message.substr(marker + kFirstMarker.size());
    if (rest.starts_with(kInstructionClause)) {
      parsed.instruction =
          strip_trailing_period(rest.substr(kInstructionClause.size()));
    }
    return parsed;
  }
  if (message.starts_with(kNextPrefix)) {
    const std::string rest = message.substr(kNextPrefix.size());
    const std::size_t marker = rest.find(kNextInstructionMarker);
    if (marker == std::string::npos) {
      parsed.premise = strip_trailing_period(rest);
    } else {
      parsed.premise = rest.substr(0, marker);
      parsed.instruction =
          strip_trailing_period(rest.substr(marker + kNextInstructionMarker.size()));
    }
    return parsed;
  }
  return std::nullopt;
}

const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> kStopwords = {
      "the",   "a",     "an",      "and",   "or",    "of",    "in",    "on",    "to",
      "this",  "that",  "these",   "those", "who",   "whom",  "would", "could", "should",
      "be",    "been",  "being",   "is",    "are",   "was",   "were",  "with",  "for",
      "their", "them",  "they",    "how",   "can",   "will",  "it",    "its",   "as",
      "at",    "by",    "from",    "into",  "while", "not",   "through", "other", "where",
      "when",  "than",  "then",    "your",  "you",   "our",   "ours",  "also",  "does",
      "doesn", "don",   "have",    "has",   "had",   "more",  "most",  "some",  "such",
      "very",  "over",  "under",   "about", "after", "before"};
  return kStopwords;
}

}  // namespace

std::vector<std::string> MockChatProvider::extract_keywords(std::string_view text) {
  std::vector<std::string> keywords;
  std::unordered_set<std::string> seen;
  std::string word;
  auto flush = [&] {
    if (word.size() >= 4 && !stopwords().contains(word) && seen.insert(word).second &&
        keywords.size() < 8) {
      keywords.push_back(word);
    }
    word.clear();
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return keywords;
}

std::string MockChatProvider::complete(const std::vector<ChatMessage>& history,
                                       const GenerationParams& params) {
  validate_params(params);
  if (history.empty() || history.front().role != Role::System) {
    throw ProviderError("history must begin with the system message");
  }
  if (history.back().role != Role::User) {
    throw ProviderError("history must end with a user message");
  }
  const std::string& message = history.back().content;
  const std::optional<ParsedPrompt> parsed = parse_pipeline_prompt(message);

  static constexpr const char* kAdjectives[] = {"quiet",     "restless", "amber",  "distant",
                                                "hollow",    "bright",   "patient", "crooked",
                                                "weathered", "pale",     "sudden",  "wary"};
  static constexpr const char* kNouns[] = {"harbor", "lantern", "argument", "doorway",
                                           "map",    "promise", "storm",    "letter",
                                           "bargain", "road",   "threshold", "echo"};
  static constexpr const char* kVerbs[] = {"lingered", "shifted",  "unraveled", "sharpened",
                                           "wandered", "settled",  "flickered", "turned",
                                           "gathered", "waited",   "tightened", "drifted"};
  constexpr std::size_t kAdjCount = std::size(kAdjectives);
  constexpr std::size_t kNounCount = std::size(kNouns);
  constexpr std::size_t kVerbCount = std::size(kVerbs);

  std::mt19937_64 rng(fnv1a64(message));
  auto pick = [&rng](const char* const* words, std::size_t count) {
    return std::string(words[rng() % count]);
  };

  std::string reply;
  if (parsed && !parsed->premise.empty()) {
    reply += "The tale of " + parsed->premise + " moved forward.";
  }
  if (parsed && parsed->instruction) {
    const std::vector<std::string> keywords = extract_keywords(*parsed->instruction);
    if (!keywords.empty()) {
      reply += reply.empty() ? "" : " ";
      reply += "In this scene, ";
      for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (i > 0) reply += ", ";
        reply += keywords[i];
      }
      reply += " mattered most.";
    }
  }
  reply += reply.empty() ? "" : " ";
  reply += "A " + pick(kAdjectives, kAdjCount) + " " + pick(kNouns, kNounCount) + " " +
           pick(kVerbs, kVerbCount) + " near the " + pick(kNouns, kNounCount) + ".";
  reply += " Something " + pick(kAdjectives, kAdjCount) + " " + pick(kVerbs, kVerbCount) +
           " as the " + pick(kNouns, kNounCount) + " " + pick(kVerbs, kVerbCount) + ".";
  return reply;
}

// ---------------------------------------------------------------------------
// Story assembly
// ---------------------------------------------------------------------------

namespace {

Story chain_story(const Premise& premise, std::optional<Outline> outline,
                  const std::vector<std::optional<std::string>>& instructions,
                  ChatProvider& provider, const GenerationParams& params, const Clock& clock) {
  Story story;
  story.premise = premise;
  story.condition = outline ? StoryCondition::Guided : StoryCondition::Unguided;
  story.outline = std::move(outline);
  story.metadata.model_id = params.model_id;
  story.metadata.provider = provider.name();
  story.metadata.params = params;
  story.metadata.started_at = clock.now_iso8601();

  std::vector<ChatMessage> history;
  history.push_back({Role::System, std::string(kSystemPrompt)});

  for (std::size_t i = 0; i < instructions.size(); ++i) {
    const std::string prompt = (i == 0) ? render_first_prompt(premise, instructions[i])
                                        : render_next_prompt(premise, instructions[i]);
    history.push_back({Role::User, prompt});

    std::string reply;
    try {
      reply = provider.complete(history, params);
    } catch (const Error& e) {
      throw StoryGenerationError(
          "scene " + std::to_string(i + 1) + ": " + e.what(), static_cast<int>(i) + 1,
          story.paragraphs);
    }
    const std::string paragraph = collapse_paragraph(reply);
    if (paragraph.empty()) {
      throw StoryGenerationError("scene " + std::to_string(i + 1) + ": empty completion",
                                 static_cast<int>(i) + 1, story.paragraphs);
    }
    history.push_back({Role::Assistant, paragraph});
    story.paragraphs.push_back(paragraph);
  }

  story.metadata.finished_at = clock.now_iso8601();
  return story;
}

}  // namespace

Story write_story(const Premise& premise, const Outline& outline, const InstructionMap& map,
                  ChatProvider& provider, const GenerationParams& params, const Clock& clock) {
  validate_params(params);
  const std::vector<std::string> translated = translate(outline, map);
  std::vector<std::optional<std::string>> instructions(translated.begin(), translated.end());
  return chain_story(premise, outline, instructions, provider, params, clock);
}

Story write_story_unguided(const Premise& premise, int n_paragraphs, ChatProvider& provider,
                           const GenerationParams& params, const Clock& clock) {
  validate_params(params);
  if (n_paragraphs < 1) throw Error("n_paragraphs must be >= 1");
  std::vector<std::optional<std::string>> instructions(static_cast<std::size_t>(n_paragraphs),
                                                       std::nullopt);
  return chain_story(premise, std::nullopt, instructions, provider, params, clock);
}

}  // namespace fable
