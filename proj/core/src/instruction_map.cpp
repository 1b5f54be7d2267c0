#include "fable/instruction_map.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fable {

namespace {

using nlohmann::json;

constexpr const char* kDefaultKey = "_default";

void replace_all(std::string& text, std::string_view placeholder, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
}

std::string substitute(std::string text, const SceneAssignment& a) {
  replace_all(text, "{function}", a.function);
  replace_all(text, "{param}", a.param ? *a.param : "");
  return text;
}

bool is_valid_token_key(const std::string& key) {
  const std::size_t colon = key.find(':');
  if (colon == std::string::npos) return is_identifier(key);
  return is_identifier(key.substr(0, colon)) && is_identifier(key.substr(colon + 1)) &&
         key.find(':', colon + 1) == std::string::npos;
}

}  // namespace

InstructionMap InstructionMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instruction map: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

InstructionMap InstructionMap::parse(const std::string& json_text) {
  // The SAX callback sees every key, including ones nlohmann's object would
  // silently collapse, so duplicates can be rejected.
  std::vector<std::string> keys;
  json::parser_callback_t watch_keys = [&keys](int /*depth*/, json::parse_event_t event,
                                               json& parsed) {
    if (event == json::parse_event_t::key) keys.push_back(parsed.get<std::string>());
    return true;
  };

  json doc;
  try {
    doc = json::parse(json_text, watch_keys);
  } catch (const json::exception& e) {
    throw Error(std::string("instruction map: ") + e.what());
  }
  if (!doc.is_object()) throw Error("instruction map must be a JSON object");

  std::sort(keys.begin(), keys.end());
  const auto dup = std::adjacent_find(keys.begin(), keys.end());
  if (dup != keys.end()) {
    throw Error("instruction map: duplicate key '" + *dup + "'");
  }

  std::map<std::string, std::string> entries;
  std::optional<std::string> default_template;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_string()) {
      throw Error("instruction map: value for '" + key + "' must be a string");
    }
    if (key == kDefaultKey) {
      default_template = value.get<std::string>();
    } else {
      entries.emplace(key, value.get<std::string>());
    }
  }
  return from_entries(std::move(entries), std::move(default_template));
}

InstructionMap InstructionMap::from_entries(std::map<std::string, std::string> entries,
                                            std::optional<std::string> default_template) {
  for (const auto& [key, tmpl] : entries) {
    if (!is_valid_token_key(key)) {
      throw Error("instruction map: invalid token key '" + key + "'");
    }
    if (tmpl.empty()) {
      throw Error("instruction map: empty template for '" + key + "'");
    }
  }
  if (default_template && default_template->empty()) {
    throw Error("instruction map: empty _default template");
  }
  InstructionMap map;
  map.entries_ = std::move(entries);
  map.default_template_ = std::move(default_template);
  return map;
}

std::string InstructionMap::resolve(const SceneAssignment& assignment, int scene_index) const {
  if (assignment.param) {
    const auto exact = entries_.find(assignment.token());
    if (exact != entries_.end()) return substitute(exact->second, assignment);
  }
  const auto by_function = entries_.find(assignment.function);
  if (by_function != entries_.end()) return substitute(by_function->second, assignment);
  if (default_template_) return substitute(*default_template_, assignment);
  throw Error("no instruction for token '" + assignment.token() + "' at scene " +
              std::to_string(scene_index));
}

std::vector<std::string> translate(const Outline& outline, const InstructionMap& map) {
  std::vector<std::string> out;
  out.reserve(outline.assignments.size());
  for (std::size_t i = 0; i < outline.assignments.size(); ++i) {
    out.push_back(map.resolve(outline.assignments[i], static_cast<int>(i) + 1));
  }
  return out;
}

}  // namespace fable
