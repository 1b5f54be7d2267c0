#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fable/outline_dsl.hpp"

namespace fable {

/// Maps outline tokens to human-authored writing instructions.
///
/// Lookup order for a token: the exact "function:param" key, then the bare
/// "function" key, then the default template when one is configured
/// (otherwise the lookup fails). Whichever template wins, "{function}" and
/// "{param}" placeholders are substituted with the token's parts ("{param}"
/// becomes empty for parameterless tokens).
class InstructionMap {
 public:
  /// File format: a JSON object of {token: template}; an optional "_default"
  /// entry supplies the fallback template. Duplicate keys, empty templates,
  /// and malformed token keys are rejected.
  static InstructionMap load(const std::filesystem::path& path);
  static InstructionMap parse(const std::string& json_text);

  /// Build programmatically; validates the same invariants as load().
  static InstructionMap from_entries(std::map<std::string, std::string> entries,
                                     std::optional<std::string> default_template = {});

  /// Instruction for one token. `scene_index` is 1-based and only used to
  /// label errors.
  std::string resolve(const SceneAssignment& assignment, int scene_index) const;

  bool has_default() const { return default_template_.has_value(); }
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  InstructionMap() = default;

  std::map<std::string, std::string> entries_;
  std::optional<std::string> default_template_;
};

/// Instruction per scene, same length and order as the outline. Element i
/// depends only on token i and the map.
std::vector<std::string> translate(const Outline& outline, const InstructionMap& map);

}  // namespace fable
