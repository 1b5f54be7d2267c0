#include "fable/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "fable/hashing.hpp"
#include "fable/pool_io.hpp"
#include "fable/report_io.hpp"
#include "fable/story_archive.hpp"

namespace fable {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config loading
// ---------------------------------------------------------------------------

// Minimal TOML reader covering flat configs: [table] headers, bare keys,
// strings, integers, floats, booleans, and one-line arrays. Produces the
// same json shape as the JSON config path.
json parse_toml_subset(const std::string& text) {
  json root = json::object();
  json* current = &root;

  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) -> void {
    throw Error("config line " + std::to_string(line_no) + ": " + why);
  };

  auto trim = [](std::string s) {
    const auto begin = s.find_first_not_of(" \t\r");
    const auto end = s.find_last_not_of(" \t\r");
    return begin == std::string::npos ? std::string() : s.substr(begin, end - begin + 1);
  };

  std::function<json(const std::string&)> parse_scalar = [&](const std::string& raw) -> json {
    if (raw.empty()) fail("missing value");
    if (raw.front() == '"') {
      if (raw.size() < 2 || raw.back() != '"') fail("unterminated string");
      std::string out;
      for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        if (raw[i] == '\\' && i + 2 < raw.size()) {
          ++i;
          if (raw[i] == 'n') out += '\n';
          else out += raw[i];
        } else {
          out += raw[i];
        }
      }
      return out;
    }
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.find('.') != std::string::npos || raw.find('e') != std::string::npos) {
      try {
        return std::stod(raw);
      } catch (...) {
        fail("bad number '" + raw + "'");
      }
    }
    try {
      return std::stoll(raw);
    } catch (...) {
      fail("bad value '" + raw + "'");
    }
    return nullptr;
  };

  while (std::getline(lines, line)) {
    ++line_no;
    // strip comments outside strings
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated table header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail("empty table name");
      current = &root[name];
      if (current->is_null()) *current = json::object();
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail("empty key");

    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') fail("arrays must close on the same line");
      json arr = json::array();
      std::string inner = trim(value.substr(1, value.size() - 2));
      while (!inner.empty()) {
        std::size_t split = std::string::npos;
        bool str = false;
        for (std::size_t i = 0; i < inner.size(); ++i) {
          if (inner[i] == '"' && (i == 0 || inner[i - 1] != '\\')) str = !str;
          if (inner[i] == ',' && !str) {
            split = i;
            break;
          }
        }
        const std::string item = trim(split == std::string::npos ? inner : inner.substr(0, split));
        if (!item.empty()) arr.push_back(parse_scalar(item));
        if (split == std::string::npos) break;
        inner = trim(inner.substr(split + 1));
      }
      (*current)[key] = std::move(arr);
    } else {
      (*current)[key] = parse_scalar(value);
    }
  }
  return root;
}

void apply_provider(const json& obj, ProviderSettings& out) {
  out.kind = obj.value("kind", out.kind);
  out.endpoint = obj.value("endpoint", out.endpoint);
  out.model_id = obj.value("model_id", out.model_id);
  out.api_key_env = obj.value("api_key_env", out.api_key_env);
}

void apply_embedder(const json& obj, EmbedderSettings& out) {
  out.kind = obj.value("kind", out.kind);
  out.endpoint = obj.value("endpoint", out.endpoint);
  out.model_id = obj.value("model_id", out.model_id);
  out.api_key_env = obj.value("api_key_env", out.api_key_env);
}

std::filesystem::path resolve_against(const std::filesystem::path& base,
                                      const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

// ---------------------------------------------------------------------------
// Story archive naming
// ---------------------------------------------------------------------------

std::string slugify(const std::string& premise) {
  std::string slug;
  for (char c : premise) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      slug += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!slug.empty() && slug.back() != '_') {
      slug += '_';
    }
  }
  while (!slug.empty() && slug.back() == '_') slug.pop_back();
  return slug.empty() ? "premise" : slug;
}

std::string zero_pad(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

std::vector<std::string> default_premises() {
  return {"cat pirate",
          "dwarven courtroom drama",
          "Cold Emu War",
          "haunted lighthouse keeper",
          "robot gardener on mars",
          "time-traveling sous chef"};
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();

  json doc;
  if (path.extension() == ".toml") {
    doc = parse_toml_subset(buf.str());
  } else {
    try {
      doc = json::parse(buf.str());
    } catch (const json::exception& e) {
      throw Error("config " + path.string() + ": " + e.what());
    }
  }
  if (!doc.is_object()) throw Error("config must be a JSON/TOML table");

  ExperimentConfig cfg;
  cfg.premises = default_premises();

  if (doc.contains("spec_path")) cfg.spec_path = doc["spec_path"].get<std::string>();
  if (doc.contains("instruction_map_path")) {
    cfg.instruction_map_path = doc["instruction_map_path"].get<std::string>();
  }
  if (doc.contains("premises")) cfg.premises = doc["premises"].get<std::vector<std::string>>();
  cfg.stories_per_condition = doc.value("stories_per_condition", cfg.stories_per_condition);
  cfg.paragraphs = doc.value("paragraphs", cfg.paragraphs);
  if (doc.contains("provider")) apply_provider(doc["provider"], cfg.provider);
  if (doc.contains("embedder")) apply_embedder(doc["embedder"], cfg.embedder);
  if (doc.contains("generation")) {
    const json& g = doc["generation"];
    cfg.generation.temperature = g.value("temperature", cfg.generation.temperature);
    cfg.generation.max_output_tokens =
        g.value("max_output_tokens", cfg.generation.max_output_tokens);
    cfg.generation.request_timeout =
        std::chrono::milliseconds(g.value("request_timeout_ms", 30'000));
    cfg.generation.max_retries = g.value("max_retries", cfg.generation.max_retries);
  }
  if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
  cfg.master_seed = doc.value("master_seed", cfg.master_seed);
  cfg.parallelism = doc.value("parallelism", cfg.parallelism);
  cfg.model_cap = doc.value("model_cap", cfg.model_cap);

  const std::filesystem::path base = path.parent_path();
  cfg.spec_path = resolve_against(base, cfg.spec_path);
  cfg.instruction_map_path = resolve_against(base, cfg.instruction_map_path);
  cfg.output_dir = resolve_against(base, cfg.output_dir);

  if (cfg.premises.empty()) throw Error("config: premises must be nonempty");
  if (cfg.stories_per_condition < 2) {
    throw Error("config: stories_per_condition must be >= 2 (homogeneity needs two texts)");
  }
  if (cfg.paragraphs < 1) throw Error("config: paragraphs must be >= 1");
  cfg.generation.model_id = cfg.provider.model_id;
  return cfg;
}

std::unique_ptr<ChatProvider> make_chat_provider(const ProviderSettings& settings) {
  if (settings.kind == "mock") return std::make_unique<MockChatProvider>();
  if (settings.kind == "http") {
    HttpChatConfig config;
    config.endpoint = settings.endpoint;
    if (const char* key = std::getenv(settings.api_key_env.c_str())) config.api_key = key;
    return std::make_unique<HttpChatProvider>(std::move(config));
  }
  throw Error("unknown chat provider kind '" + settings.kind + "' (expected mock or http)");
}

std::unique_ptr<Embedder> make_embedder(const EmbedderSettings& settings) {
  if (settings.kind == "hash") return std::make_unique<HashEmbedder>();
  if (settings.kind == "http") {
    HttpEmbedderConfig config;
    config.endpoint = settings.endpoint;
    config.model_id = settings.model_id;
    if (const char* key = std::getenv(settings.api_key_env.c_str())) config.api_key = key;
    return std::make_unique<HttpEmbedder>(std::move(config));
  }
  throw Error("unknown embedder kind '" + settings.kind + "' (expected hash or http)");
}

Story generate_story(const Premise& premise, StoryCondition condition, int n_paragraphs,
                     const OutlinePool* pool, const InstructionMap* map, ChatProvider& provider,
                     GenerationParams params, std::uint64_t seed, const Clock& clock) {
  params.seed = static_cast<std::int64_t>(seed);
  if (condition == StoryCondition::Guided) {
    if (pool == nullptr || map == nullptr) {
      throw Error("guided stories need an outline pool and an instruction map");
    }
    const Outline& outline = sample_uniform(*pool, seed);
    return write_story(premise, outline, *map, provider, params, clock);
  }
  return write_story_unguided(premise, n_paragraphs, provider, params, clock);
}

namespace {

struct StoryTask {
  std::string premise;
  StoryCondition condition;
  int index;
  std::uint64_t seed;
  std::filesystem::path archive_path;  // absolute
  std::string relative_path;
};

void run_tasks(const std::vector<StoryTask>& tasks, int parallelism,
               const std::function<void(std::size_t)>& work) {
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  int workers = parallelism > 0 ? parallelism : std::clamp(hw, 1, 8);
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        work(i);
      }
    });
  }
  for (auto& t : threads) t.join();
}

json manifest_json(const ExperimentConfig& config, const ExperimentResult& result) {
  json manifest;
  manifest["spec_fingerprint"] = result.spec_fingerprint;
  manifest["generator_version"] = kGeneratorVersion;
  manifest["pool"] = {{"path", result.pool_path.filename().string()},
                      {"count", result.pool_count}};
  manifest["config"] = {
      {"spec_path", config.spec_path.string()},
      {"instruction_map_path", config.instruction_map_path.string()},
      {"premises", config.premises},
      {"stories_per_condition", config.stories_per_condition},
      {"paragraphs", config.paragraphs},
      {"provider", {{"kind", config.provider.kind},
                    {"endpoint", config.provider.endpoint},
                    {"model_id", config.provider.model_id},
                    {"api_key_env", config.provider.api_key_env}}},
      {"embedder", {{"kind", config.embedder.kind},
                    {"endpoint", config.embedder.endpoint},
                    {"model_id", config.embedder.model_id},
                    {"api_key_env", config.embedder.api_key_env}}},
      {"master_seed", config.master_seed},
      {"model_cap", config.model_cap}};
  json stories = json::array();
  for (const auto& r : result.records) {
    json entry = {{"premise", r.premise},
                  {"condition", std::string(condition_name(r.condition))},
                  {"index", r.index},
                  {"seed", r.seed}};
    if (r.outline_tokens) entry["outline"] = *r.outline_tokens;
    if (!r.archive_path.empty()) entry["path"] = r.archive_path;
    if (!r.error.empty()) entry["error"] = r.error;
    stories.push_back(std::move(entry));
  }
  manifest["stories"] = std::move(stories);
  manifest["errors"] = result.errors;
  return manifest;
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path staged = path.string() + ".tmp";
  {
    std::ofstream out(staged, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + staged.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failure on " + staged.string());
  }
  std::error_code ec;
  std::filesystem::rename(staged, path, ec);
  if (ec) throw IoError("cannot move " + path.string() + " into place: " + ec.message());
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  // Load inputs.
  std::ifstream spec_in(config.spec_path);
  if (!spec_in) throw IoError("cannot open spec: " + config.spec_path.string());
  std::ostringstream spec_buf;
  spec_buf << spec_in.rdbuf();
  const OutlineSpec spec = parse_spec(spec_buf.str());
  const InstructionMap map = InstructionMap::load(config.instruction_map_path);

  if (spec.num_scenes != config.paragraphs) {
    throw Error("config paragraphs (" + std::to_string(config.paragraphs) +
                ") must equal the spec's scene count (" + std::to_string(spec.num_scenes) +
                ") so guided and unguided sets are comparable");
  }

  std::filesystem::create_directories(config.output_dir);

  ExperimentResult result;
  result.pool_path = config.output_dir / "pool.jsonl";
  EnumerationOptions enum_options;
  enum_options.model_cap = config.model_cap;
  const PoolWriteResult pool_written = write_pool_file(spec, result.pool_path, enum_options);
  result.spec_fingerprint = pool_written.spec_fingerprint;
  result.pool_count = pool_written.count;
  const OutlinePool pool = load_pool(result.pool_path);
  if (pool.count() == 0) {
    throw Error("spec admits no outlines; nothing to sample");
  }

  const std::unique_ptr<ChatProvider> provider = make_chat_provider(config.provider);
  const std::unique_ptr<Embedder> embedder = make_embedder(config.embedder);
  const std::unique_ptr<Clock> clock =
      provider->deterministic() ? std::unique_ptr<Clock>(std::make_unique<FixedClock>())
                                : std::unique_ptr<Clock>(std::make_unique<SystemClock>());

  // Unique directory per premise; disambiguate slug collisions by position.
  std::unordered_map<std::string, int> slug_seen;
  std::vector<std::string> premise_dirs;
  for (const auto& premise : config.premises) {
    std::string slug = slugify(premise);
    const int n = slug_seen[slug]++;
    if (n > 0) slug += "_" + std::to_string(n + 1);
    premise_dirs.push_back(slug);
  }

  std::vector<StoryTask> tasks;
  for (std::size_t pi = 0; pi < config.premises.size(); ++pi) {
    const std::string& premise = config.premises[pi];
    for (StoryCondition condition : {StoryCondition::Guided, StoryCondition::Unguided}) {
      for (int index = 0; index < config.stories_per_condition; ++index) {
        StoryTask task;
        task.premise = premise;
        task.condition = condition;
        task.index = index;
        task.seed = derive_seed(config.master_seed, premise, condition_name(condition), index);
        const std::string filename =
            std::string(condition_name(condition)) + "_" + zero_pad(index, 3) + ".json";
        task.relative_path = "stories/" + premise_dirs[pi] + "/" + filename;
        task.archive_path = config.output_dir / task.relative_path;
        tasks.push_back(std::move(task));
      }
    }
  }
  for (const auto& dir : premise_dirs) {
    std::filesystem::create_directories(config.output_dir / "stories" / dir);
  }

  std::vector<StoryRecord> records(tasks.size());
  std::vector<std::optional<Story>> stories(tasks.size());
  run_tasks(tasks, config.parallelism, [&](std::size_t i) {
    const StoryTask& task = tasks[i];
    StoryRecord& record = records[i];
    record.premise = task.premise;
    record.condition = task.condition;
    record.index = task.index;
    record.seed = task.seed;
    try {
      const Premise premise = Premise::make(task.premise);
      Story story = generate_story(premise, task.condition, config.paragraphs, &pool, &map,
                                   *provider, config.generation, task.seed, *clock);
      if (story.outline) record.outline_tokens = story.outline->tokens();
      save_story(story, task.archive_path);
      record.archive_path = task.relative_path;
      stories[i] = std::move(story);
    } catch (const std::exception& e) {
      record.error = e.what();
    }
  });
  result.records = std::move(records);

  // Group into story sets and score.
  std::map<std::pair<std::string, StoryCondition>, std::vector<Story>> groups;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (stories[i]) groups[{tasks[i].premise, tasks[i].condition}].push_back(*stories[i]);
  }
  for (const auto& r : result.records) {
    if (!r.error.empty()) {
      result.errors.push_back(r.premise + "/" + std::string(condition_name(r.condition)) +
                              " story " + std::to_string(r.index) + ": " + r.error);
    }
  }

  for (const auto& premise : config.premises) {
    for (StoryCondition condition : {StoryCondition::Guided, StoryCondition::Unguided}) {
      auto it = groups.find({premise, condition});
      const std::size_t n = it == groups.end() ? 0 : it->second.size();
      if (n < 2) {
        result.errors.push_back(premise + "/" + std::string(condition_name(condition)) +
                                ": only " + std::to_string(n) +
                                " stories generated; homogeneity skipped");
        continue;
      }
      try {
        const StorySet set = StorySet::from_stories(it->second);
        const std::vector<double> scores = paragraph_homogeneity(set, *embedder);
        for (std::size_t i = 0; i < scores.size(); ++i) {
          result.report.rows.push_back({premise, std::string(condition_name(condition)),
                                        static_cast<int>(i) + 1, scores[i],
                                        static_cast<int>(n)});
        }
      } catch (const Error& e) {
        result.errors.push_back(premise + "/" + std::string(condition_name(condition)) + ": " +
                                e.what());
      }
    }
  }

  result.csv_path = config.output_dir / "homogeneity.csv";
  result.chart_path = config.output_dir / "homogeneity.svg";
  result.manifest_path = config.output_dir / "manifest.json";
  if (!result.report.rows.empty()) {
    write_report_csv(result.report, result.csv_path);
    write_report_chart(result.report, result.chart_path);
  }
  atomic_write_text(result.manifest_path, manifest_json(config, result).dump(2) + "\n");
  return result;
}

}  // namespace fable
