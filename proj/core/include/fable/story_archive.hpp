#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fable/story_writer.hpp"

namespace fable {

/// Story archive: one JSON document per story, with premise, condition,
/// outline tokens (guided only), paragraphs, and generation metadata. Keys
/// serialize in sorted order, so a given story renders byte-identically.
std::string story_to_json(const Story& story);

Story story_from_json(const std::string& json_text);

/// Atomic write (temp file + rename).
void save_story(const Story& story, const std::filesystem::path& path);

Story load_story(const std::filesystem::path& path);

/// Loads every "*.json" story archive in the directory, sorted by filename.
std::vector<Story> load_story_dir(const std::filesystem::path& dir);

}  // namespace fable
