#include "fable/story_archive.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fable {

namespace {

using nlohmann::json;

json params_to_json(const GenerationParams& p) {
  json obj;
  obj["model_id"] = p.model_id;
  obj["temperature"] = p.temperature;
  obj["max_output_tokens"] = p.max_output_tokens;
  obj["request_timeout_ms"] = p.request_timeout.count();
  obj["max_retries"] = p.max_retries;
  if (p.seed) {
    obj["seed"] = *p.seed;
  } else {
    obj["seed"] = nullptr;
  }
  return obj;
}

GenerationParams params_from_json(const json& obj) {
  GenerationParams p;
  p.model_id = obj.value("model_id", "");
  p.temperature = obj.value("temperature", 1.0);
  p.max_output_tokens = obj.value("max_output_tokens", 400);
  p.request_timeout = std::chrono::milliseconds(obj.value("request_timeout_ms", 30'000));
  p.max_retries = obj.value("max_retries", 3);
  if (obj.contains("seed") && !obj["seed"].is_null()) {
    p.seed = obj["seed"].get<std::int64_t>();
  }
  return p;
}

void validate_story(const Story& story) {
  if (story.condition == StoryCondition::Guided) {
    if (!story.outline) throw Error("guided story must carry an outline");
    if (story.outline->assignments.size() != story.paragraphs.size()) {
      throw Error("guided story must have one paragraph per outline scene");
    }
  } else if (story.outline) {
    throw Error("unguided story must not carry an outline");
  }
  for (const auto& p : story.paragraphs) {
    if (p.empty()) throw Error("story paragraphs must be nonempty");
  }
}

}  // namespace

std::string story_to_json(const Story& story) {
  validate_story(story);
  json doc;
  doc["premise"] = story.premise.text;
  doc["condition"] = std::string(condition_name(story.condition));
  if (story.outline) doc["outline"] = story.outline->tokens();
  doc["paragraphs"] = story.paragraphs;
  doc["metadata"] = {{"model_id", story.metadata.model_id},
                     {"provider", story.metadata.provider},
                     {"started_at", story.metadata.started_at},
                     {"finished_at", story.metadata.finished_at},
                     {"params", params_to_json(story.metadata.params)}};
  return doc.dump(2) + "\n";
}

Story story_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("story archive: ") + e.what());
  }
  Story story;
  story.premise = Premise::make(doc.at("premise").get<std::string>());
  story.condition = condition_from_name(doc.at("condition").get<std::string>());
  if (doc.contains("outline")) {
    story.outline = Outline::from_tokens(doc["outline"].get<std::vector<std::string>>());
  }
  story.paragraphs = doc.at("paragraphs").get<std::vector<std::string>>();
  if (doc.contains("metadata")) {
    const json& m = doc["metadata"];
    story.metadata.model_id = m.value("model_id", "");
    story.metadata.provider = m.value("provider", "");
    story.metadata.started_at = m.value("started_at", "");
    story.metadata.finished_at = m.value("finished_at", "");
    if (m.contains("params")) story.metadata.params = params_from_json(m["params"]);
  }
  validate_story(story);
  return story;
}

void save_story(const Story& story, const std::filesystem::path& path) {
  const std::filesystem::path staged = path.string() + ".tmp";
  {
    std::ofstream out(staged, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + staged.string());
    out << story_to_json(story);
    out.flush();
    if (!out) throw IoError("write failure on " + staged.string());
  }
  std::error_code ec;
  std::filesystem::rename(staged, path, ec);
  if (ec) throw IoError("cannot move " + path.string() + " into place: " + ec.message());
}

Story load_story(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open story archive: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return story_from_json(buf.str());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::vector<Story> load_story_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Story> stories;
  stories.reserve(files.size());
  for (const auto& f : files) stories.push_back(load_story(f));
  return stories;
}

}  // namespace fable
