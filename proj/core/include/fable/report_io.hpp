#pragma once

#include <filesystem>
#include <string>

#include "fable/diversity_eval.hpp"

namespace fable {

/// CSV with header "premise,condition,paragraph_index,score,set_size" and
/// one row per report row, sorted by (premise, condition, paragraph_index)
/// so output is byte-stable regardless of input order. Throws on an empty
/// report or an unwritable path.
void write_report_csv(const HomogeneityReport& report, const std::filesystem::path& path);

std::string render_report_csv(const HomogeneityReport& report);

/// SVG line chart mirroring the report: one panel per premise, a blue
/// guided series and a red unguided series over paragraph index. Conditions
/// present for a premise must cover the same paragraph indices.
void write_report_chart(const HomogeneityReport& report, const std::filesystem::path& path);

std::string render_report_chart(const HomogeneityReport& report);

}  // namespace fable
