// fable: enumerate constrained story outlines, expand them into stories via
// a chat-completion provider, and score story-set diversity.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fable/experiment.hpp"
#include "fable/hashing.hpp"
#include "fable/pool_io.hpp"
#include "fable/report_io.hpp"
#include "fable/story_archive.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitProvider = 3;

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw fable::IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fable::OutlineSpec load_spec(const std::filesystem::path& path) {
  return fable::parse_spec(read_file(path));
}

struct ProviderFlags {
  std::string kind = "mock";
  std::string endpoint;
  std::string model_id;
  std::string api_key_env = "FABLE_API_KEY";
  double temperature = 1.0;
  int max_tokens = 400;
  int timeout_ms = 30'000;
  int retries = 3;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--provider", kind, "Chat provider kind: mock | http")
        ->check(CLI::IsMember({"mock", "http"}));
    cmd.add_option("--endpoint", endpoint, "Chat-completions endpoint URL (http provider)");
    cmd.add_option("--model", model_id, "Model id sent to the provider");
    cmd.add_option("--api-key-env", api_key_env,
                   "Environment variable holding the API key (default FABLE_API_KEY)");
    cmd.add_option("--temperature", temperature, "Sampling temperature in [0, 2]");
    cmd.add_option("--max-tokens", max_tokens, "Max output tokens per paragraph")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--timeout-ms", timeout_ms, "Per-request timeout in milliseconds")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--retries", retries, "Max retries on transient failures")
        ->check(CLI::NonNegativeNumber);
  }

  fable::ProviderSettings settings() const {
    fable::ProviderSettings s;
    s.kind = kind;
    s.endpoint = endpoint;
    s.model_id = model_id;
    s.api_key_env = api_key_env;
    return s;
  }

  fable::GenerationParams params() const {
    fable::GenerationParams p;
    p.model_id = model_id;
    p.temperature = temperature;
    p.max_output_tokens = max_tokens;
    p.request_timeout = std::chrono::milliseconds(timeout_ms);
    p.max_retries = retries;
    return p;
  }
};

struct EmbedderFlags {
  std::string kind = "hash";
  std::string endpoint;
  std::string model_id;
  std::string api_key_env = "FABLE_API_KEY";

  void add_to(CLI::App& cmd) {
    cmd.add_option("--embedder", kind, "Embedding provider kind: hash | http")
        ->check(CLI::IsMember({"hash", "http"}));
    cmd.add_option("--embedder-endpoint", endpoint, "Embeddings endpoint URL (http embedder)");
    cmd.add_option("--embedder-model", model_id, "Embedding model id");
    cmd.add_option("--embedder-api-key-env", api_key_env,
                   "Environment variable holding the embedder API key");
  }

  fable::EmbedderSettings settings() const {
    fable::EmbedderSettings s;
    s.kind = kind;
    s.endpoint = endpoint;
    s.model_id = model_id;
    s.api_key_env = api_key_env;
    return s;
  }
};

void print_violations(const std::vector<fable::Violation>& violations, const std::string& label) {
  for (const auto& v : violations) {
    std::cerr << label << ": " << v.rule << ": " << v.message << "\n";
  }
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_enumerate(const std::string& spec_path, const std::string& out_path, bool count_only,
                  std::uint64_t cap, bool parallel) {
  const fable::OutlineSpec spec = load_spec(spec_path);
  fable::EnumerationOptions options;
  options.model_cap = cap;
  options.parallel = parallel;

  if (count_only) {
    const std::uint64_t n = fable::count_models(spec, options);
    std::cout << "count: " << n << "\n";
    std::cout << "fingerprint: " << fable::spec_fingerprint(spec) << "\n";
    return kExitOk;
  }
  const fable::PoolWriteResult result = fable::write_pool_file(spec, out_path, options);
  std::cout << "count: " << result.count << "\n";
  std::cout << "fingerprint: " << result.spec_fingerprint << "\n";
  std::cout << "pool: " << out_path << "\n";
  return kExitOk;
}

int cmd_sample(const std::string& pool_path, std::uint64_t seed, int n) {
  const fable::OutlinePool pool = fable::load_pool(pool_path);
  for (int i = 0; i < n; ++i) {
    const fable::Outline& outline = fable::sample_uniform(pool, seed + static_cast<std::uint64_t>(i));
    std::cout << json(outline.tokens()).dump() << "\n";
  }
  return kExitOk;
}

int cmd_check(const std::string& spec_path, const std::string& outline_json,
              const std::string& pool_path, int sample_n, std::uint64_t seed) {
  const fable::OutlineSpec spec = load_spec(spec_path);

  if (!outline_json.empty()) {
    json arr = json::parse(outline_json);
    const fable::Outline outline = fable::Outline::from_tokens(arr.get<std::vector<std::string>>());
    const auto violations = fable::check_outline(spec, outline);
    if (violations.empty()) {
      std::cout << "valid\n";
      return kExitOk;
    }
    print_violations(violations, "outline");
    return kExitValidation;
  }

  // Pool mode: check everything, or a seeded sample.
  std::uint64_t checked = 0;
  std::uint64_t invalid = 0;
  if (sample_n > 0) {
    const fable::OutlinePool pool = fable::load_pool(pool_path);
    for (int i = 0; i < sample_n; ++i) {
      const fable::Outline& outline =
          fable::sample_uniform(pool, seed + static_cast<std::uint64_t>(i));
      const auto violations = fable::check_outline(spec, outline);
      ++checked;
      if (!violations.empty()) {
        ++invalid;
        print_violations(violations, "sample " + std::to_string(i));
      }
    }
  } else {
    fable::for_each_pool_outline(pool_path, [&](const fable::Outline& outline) {
      const auto violations = fable::check_outline(spec, outline);
      ++checked;
      if (!violations.empty()) {
        ++invalid;
        print_violations(violations, "outline " + std::to_string(checked));
      }
    });
  }
  std::cout << "checked " << checked << " outlines, " << invalid << " invalid\n";
  return invalid == 0 ? kExitOk : kExitValidation;
}

int cmd_write(const std::string& pool_path, const std::string& premise_text, int n, bool baseline,
              int paragraphs, std::uint64_t seed, const std::string& map_path,
              const std::string& out_dir, const ProviderFlags& provider_flags) {
  const fable::Premise premise = fable::Premise::make(premise_text);
  const auto provider = fable::make_chat_provider(provider_flags.settings());
  const fable::GenerationParams params = provider_flags.params();
  const fable::FixedClock fixed_clock;
  const fable::SystemClock system_clock;
  const fable::Clock& clock =
      provider->deterministic() ? static_cast<const fable::Clock&>(fixed_clock)
                                : static_cast<const fable::Clock&>(system_clock);

  std::optional<fable::OutlinePool> pool;
  std::optional<fable::InstructionMap> map;
  if (!baseline) {
    if (pool_path.empty()) {
      std::cerr << "a pool file is required unless --baseline is given\n";
      return kExitUsage;
    }
    if (map_path.empty()) {
      std::cerr << "--map is required unless --baseline is given\n";
      return kExitUsage;
    }
    pool = fable::load_pool(pool_path);
    map = fable::InstructionMap::load(map_path);
  }

  std::filesystem::create_directories(out_dir);
  const auto condition = baseline ? fable::StoryCondition::Unguided : fable::StoryCondition::Guided;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t story_seed = seed + static_cast<std::uint64_t>(i);
    const std::string name = std::string(fable::condition_name(condition)) + "_" +
                             std::to_string(i) + ".json";
    const std::filesystem::path path = std::filesystem::path(out_dir) / name;
    try {
      const fable::Story story =
          fable::generate_story(premise, condition, paragraphs, pool ? &*pool : nullptr,
                                map ? &*map : nullptr, *provider, params, story_seed, clock);
      fable::save_story(story, path);
      std::cout << path.string() << "\n";
    } catch (const fable::StoryGenerationError& e) {
      // Keep what was generated: partial paragraphs go into an error report.
      json report = {{"premise", premise.text},
                     {"condition", std::string(fable::condition_name(condition))},
                     {"seed", story_seed},
                     {"error", e.what()},
                     {"failed_scene", e.failed_scene()},
                     {"partial_paragraphs", e.partial_paragraphs()}};
      const std::filesystem::path error_path =
          std::filesystem::path(out_dir) / (name + ".error.json");
      std::ofstream out(error_path);
      out << report.dump(2) << "\n";
      std::cerr << "story " << i << " failed: " << e.what() << " (report: " << error_path.string()
                << ")\n";
      return kExitProvider;
    }
  }
  return kExitOk;
}

int cmd_evaluate(const std::vector<std::string>& story_dirs, const std::string& out_csv,
                 const std::string& chart_path, const EmbedderFlags& embedder_flags) {
  std::vector<fable::Story> stories;
  for (const auto& dir : story_dirs) {
    auto loaded = fable::load_story_dir(dir);
    stories.insert(stories.end(), std::make_move_iterator(loaded.begin()),
                   std::make_move_iterator(loaded.end()));
  }
  if (stories.empty()) {
    std::cerr << "no story archives found\n";
    return kExitValidation;
  }

  std::map<std::pair<std::string, std::string>, std::vector<fable::Story>> groups;
  for (auto& s : stories) {
    groups[{s.premise.text, std::string(fable::condition_name(s.condition))}].push_back(
        std::move(s));
  }

  const auto embedder = fable::make_embedder(embedder_flags.settings());
  fable::HomogeneityReport report;
  for (auto& [key, group] : groups) {
    const auto& [premise, condition] = key;
    const fable::StorySet set = fable::StorySet::from_stories(std::move(group));
    const std::vector<double> scores = fable::paragraph_homogeneity(set, *embedder);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      report.rows.push_back({premise, condition, static_cast<int>(i) + 1, scores[i],
                             static_cast<int>(set.stories.size())});
    }
  }

  fable::write_report_csv(report, out_csv);
  std::cout << "rows: " << report.rows.size() << "\n";
  std::cout << "csv: " << out_csv << "\n";
  if (!chart_path.empty()) {
    fable::write_report_chart(report, chart_path);
    std::cout << "chart: " << chart_path << "\n";
  }
  return kExitOk;
}

int cmd_experiment(const std::string& config_path) {
  const fable::ExperimentConfig config = fable::load_experiment_config(config_path);
  const fable::ExperimentResult result = fable::run_experiment(config);

  int archives = 0;
  for (const auto& r : result.records) {
    if (!r.archive_path.empty()) ++archives;
  }
  std::cout << "pool: " << result.pool_path.string() << " (" << result.pool_count
            << " outlines, spec " << result.spec_fingerprint << ")\n";
  std::cout << "stories: " << archives << "\n";
  std::cout << "rows: " << result.report.rows.size() << "\n";
  std::cout << "csv: " << result.csv_path.string() << "\n";
  std::cout << "chart: " << result.chart_path.string() << "\n";
  std::cout << "manifest: " << result.manifest_path.string() << "\n";
  if (!result.errors.empty()) {
    for (const auto& e : result.errors) std::cerr << "error: " << e << "\n";
    return kExitProvider;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fable: plan-and-write story generation with constrained outline enumeration"};
  app.require_subcommand(1);

  // enumerate
  auto* enumerate = app.add_subcommand("enumerate", "Enumerate all outlines for a spec");
  std::string enum_spec;
  std::string enum_out = "pool.jsonl";
  bool enum_count_only = false;
  bool enum_parallel = false;
  std::uint64_t enum_cap = 5'000'000;
  enumerate->add_option("spec", enum_spec, "Outline DSL file")->required();
  enumerate->add_option("-o,--out", enum_out, "Pool file to write (default pool.jsonl)");
  enumerate->add_flag("--count-only", enum_count_only, "Count models, write nothing");
  enumerate->add_option("--cap", enum_cap, "Model cap (default 5000000)")
      ->check(CLI::PositiveNumber);
  enumerate->add_flag("--parallel", enum_parallel, "Partition the search across threads");

  // sample
  auto* sample = app.add_subcommand("sample", "Sample outlines uniformly from a pool file");
  std::string sample_pool;
  std::uint64_t sample_seed = 0;
  int sample_n = 1;
  sample->add_option("pool", sample_pool, "Pool file")->required();
  sample->add_option("--seed", sample_seed, "Seed for the first draw")->required();
  sample->add_option("-n", sample_n, "Number of draws (seeds seed..seed+n-1)")
      ->check(CLI::PositiveNumber);

  // check
  auto* check = app.add_subcommand("check", "Check outlines against a spec");
  std::string check_spec;
  std::string check_outline;
  std::string check_pool;
  int check_sample = 0;
  std::uint64_t check_seed = 0;
  check->add_option("spec", check_spec, "Outline DSL file")->required();
  auto* check_outline_opt =
      check->add_option("--outline", check_outline, "Outline as a JSON token array");
  check->add_option("--pool", check_pool, "Check outlines from this pool file")
      ->excludes(check_outline_opt);
  check->add_option("--sample", check_sample, "Only check this many sampled outlines")
      ->check(CLI::PositiveNumber);
  check->add_option("--seed", check_seed, "Seed for --sample draws");

  // write
  auto* write = app.add_subcommand("write", "Write stories from a premise");
  std::string write_pool;
  std::string write_premise;
  int write_n = 1;
  bool write_baseline = false;
  int write_paragraphs = 7;
  std::uint64_t write_seed = 0;
  std::string write_map;
  std::string write_out = "stories";
  ProviderFlags write_provider;
  write->add_option("pool", write_pool, "Pool file (required unless --baseline)");
  write->add_option("--premise", write_premise, "Story premise text")->required();
  write->add_option("-n", write_n, "Stories to write")->required()->check(CLI::PositiveNumber);
  write->add_flag("--baseline", write_baseline, "Unguided condition: no outline instructions");
  write->add_option("--paragraphs", write_paragraphs,
                    "Paragraph count for --baseline stories (default 7)")
      ->check(CLI::PositiveNumber);
  write->add_option("--seed", write_seed, "Seed of the first story (story i uses seed+i)");
  write->add_option("--map", write_map, "Instruction map JSON file");
  write->add_option("--out", write_out, "Output directory for story archives");
  write_provider.add_to(*write);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score homogeneity of story archives");
  std::vector<std::string> eval_dirs;
  std::string eval_csv;
  std::string eval_chart;
  EmbedderFlags eval_embedder;
  evaluate->add_option("story_dirs", eval_dirs, "Directories of story archives")->required();
  evaluate->add_option("--out-csv", eval_csv, "CSV report path")->required();
  evaluate->add_option("--chart", eval_chart, "Optional SVG chart path");
  eval_embedder.add_to(*evaluate);

  // experiment
  auto* experiment =
      app.add_subcommand("experiment", "Run the full guided-vs-unguided replication protocol");
  std::string experiment_config;
  experiment->add_option("config", experiment_config, "Experiment config (JSON or TOML)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (enumerate->parsed()) {
      return cmd_enumerate(enum_spec, enum_out, enum_count_only, enum_cap, enum_parallel);
    }
    if (sample->parsed()) {
      return cmd_sample(sample_pool, sample_seed, sample_n);
    }
    if (check->parsed()) {
      if (check_outline.empty() && check_pool.empty()) {
        std::cerr << "check needs --outline or --pool\n";
        return kExitUsage;
      }
      return cmd_check(check_spec, check_outline, check_pool, check_sample, check_seed);
    }
    if (write->parsed()) {
      return cmd_write(write_pool, write_premise, write_n, write_baseline, write_paragraphs,
                       write_seed, write_map, write_out, write_provider);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(eval_dirs, eval_csv, eval_chart, eval_embedder);
    }
    if (experiment->parsed()) {
      return cmd_experiment(experiment_config);
    }
  } catch (const fable::ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const fable::StoryGenerationError& e) {
    std::cerr << "generation error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const fable::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
