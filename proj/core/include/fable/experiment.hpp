#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fable/diversity_eval.hpp"
#include "fable/instruction_map.hpp"
#include "fable/outline_engine.hpp"
#include "fable/story_writer.hpp"

namespace fable {

struct ProviderSettings {
  std::string kind = "mock";  // "mock" | "http"
  std::string endpoint;
  std::string model_id;
  std::string api_key_env = "FABLE_API_KEY";
};

struct EmbedderSettings {
  std::string kind = "hash";  // "hash" | "http"
  std::string endpoint;
  std::string model_id;
  std::string api_key_env = "FABLE_API_KEY";
};

struct ExperimentConfig {
  std::filesystem::path spec_path;
  std::filesystem::path instruction_map_path;
  std::vector<std::string> premises;  // defaults applied by load/finalize
  int stories_per_condition = 10;    // needs >= 2 for homogeneity
  int paragraphs = 7;                // must equal the spec's scene count
  ProviderSettings provider;
  EmbedderSettings embedder;
  GenerationParams generation;
  std::filesystem::path output_dir = "out";
  std::int64_t master_seed = 0;
  int parallelism = 0;  // worker bound for story generation; 0 = auto
  std::uint64_t model_cap = 5'000'000;
};

/// The three premises named in the protocol plus three stand-ins, so the
/// default run produces the six-panel comparison shape.
std::vector<std::string> default_premises();

/// Reads JSON (default) or TOML (by .toml extension; flat tables with
/// strings, integers, floats, booleans, and string arrays). Relative paths
/// are resolved against the config file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

std::unique_ptr<ChatProvider> make_chat_provider(const ProviderSettings& settings);
std::unique_ptr<Embedder> make_embedder(const EmbedderSettings& settings);

/// Generate one story deterministically from its seed: guided stories
/// sample their outline from the pool with the seed, and the seed is also
/// recorded in the generation params. Rerunning with the same inputs and
/// seed reproduces the story byte-for-byte under a deterministic provider.
Story generate_story(const Premise& premise, StoryCondition condition, int n_paragraphs,
                     const OutlinePool* pool, const InstructionMap* map, ChatProvider& provider,
                     GenerationParams params, std::uint64_t seed, const Clock& clock);

struct StoryRecord {
  std::string premise;
  StoryCondition condition = StoryCondition::Guided;
  int index = 0;
  std::uint64_t seed = 0;
  std::optional<std::vector<std::string>> outline_tokens;
  std::string archive_path;  // relative to output_dir; empty on failure
  std::string error;         // empty on success
};

struct ExperimentResult {
  HomogeneityReport report;
  std::vector<StoryRecord> records;
  std::string spec_fingerprint;
  std::uint64_t pool_count = 0;
  std::filesystem::path pool_path;
  std::filesystem::path csv_path;
  std::filesystem::path chart_path;
  std::filesystem::path manifest_path;
  std::vector<std::string> errors;  // aggregated per premise/condition
};

/// Full replication run: enumerate the pool to a file, generate
/// stories_per_condition guided and unguided stories per premise (seeds
/// derived from master_seed via premise/condition/index hashing), score
/// per-paragraph homogeneity, and emit CSV, chart, and a manifest that can
/// reproduce any single story. Per-story failures are recorded and do not
/// abort the rest of the run.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace fable
