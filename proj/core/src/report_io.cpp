#include "fable/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace fable {

namespace {

std::string format_score(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9f", value);
  return buf;
}

std::string format_coord(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::vector<HomogeneityRow> sorted_rows(const HomogeneityReport& report) {
  std::vector<HomogeneityRow> rows = report.rows;
  std::sort(rows.begin(), rows.end(), [](const HomogeneityRow& a, const HomogeneityRow& b) {
    if (a.premise != b.premise) return a.premise < b.premise;
    if (a.condition != b.condition) return a.condition < b.condition;
    return a.paragraph_index < b.paragraph_index;
  });
  return rows;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string xml_escape(const std::string& value) {
  std::string out;
  out.reserve(value.size());
  for (char c : value) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
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

// premise -> condition -> ordered (index, score)
using SeriesMap = std::map<std::string, std::map<std::string, std::vector<std::pair<int, double>>>>;

SeriesMap group_series(const std::vector<HomogeneityRow>& rows) {
  SeriesMap series;
  for (const auto& r : rows) {
    series[r.premise][r.condition].push_back({r.paragraph_index, r.score});
  }
  return series;
}

}  // namespace

std::string render_report_csv(const HomogeneityReport& report) {
  if (report.rows.empty()) throw Error("cannot emit an empty report");
  std::ostringstream out;
  out << "premise,condition,paragraph_index,score,set_size\n";
  for (const auto& r : sorted_rows(report)) {
    out << csv_field(r.premise) << ',' << r.condition << ',' << r.paragraph_index << ','
        << format_score(r.score) << ',' << r.set_size << '\n';
  }
  return out.str();
}

void write_report_csv(const HomogeneityReport& report, const std::filesystem::path& path) {
  atomic_write(path, render_report_csv(report));
}

std::string render_report_chart(const HomogeneityReport& report) {
  if (report.rows.empty()) throw Error("cannot chart an empty report");
  const SeriesMap series = group_series(sorted_rows(report));

  // Conditions within one premise must cover identical paragraph indices.
  for (const auto& [premise, by_condition] : series) {
    const auto& first = by_condition.begin()->second;
    for (const auto& [condition, points] : by_condition) {
      if (points.size() != first.size()) {
        throw Error("mismatched paragraph counts between conditions for premise '" + premise +
                    "'");
      }
    }
  }

  constexpr double kPanelW = 300.0;
  constexpr double kPanelH = 220.0;
  constexpr double kMarginL = 46.0;
  constexpr double kMarginR = 14.0;
  constexpr double kMarginT = 34.0;
  constexpr double kMarginB = 34.0;
  const int panels = static_cast<int>(series.size());
  const double width = panels * kPanelW;
  const double height = kPanelH + 30.0;  // room for the legend row

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "  <style>text{font-family:sans-serif;font-size:11px;}.title{font-size:12px;}</style>\n";

  int panel_index = 0;
  for (const auto& [premise, by_condition] : series) {
    const double x0 = panel_index * kPanelW + kMarginL;
    const double y0 = kMarginT;
    const double plot_w = kPanelW - kMarginL - kMarginR;
    const double plot_h = kPanelH - kMarginT - kMarginB;

    int max_index = 1;
    double min_score = 0.0;
    double max_score = 1.0;
    for (const auto& [condition, points] : by_condition) {
      for (const auto& [idx, score] : points) {
        max_index = std::max(max_index, idx);
        min_score = std::min(min_score, score);
        max_score = std::max(max_score, score);
      }
    }
    auto sx = [&](int idx) {
      return max_index == 1 ? x0 + plot_w / 2
                            : x0 + (idx - 1) * plot_w / (max_index - 1);
    };
    auto sy = [&](double score) {
      return y0 + (max_score - score) / (max_score - min_score) * plot_h;
    };

    svg << "  <g class=\"panel\">\n";
    svg << "    <text class=\"title\" x=\"" << format_coord(x0 + plot_w / 2) << "\" y=\"18\" "
        << "text-anchor=\"middle\">" << xml_escape(premise) << "</text>\n";
    svg << "    <rect x=\"" << format_coord(x0) << "\" y=\"" << format_coord(y0) << "\" width=\""
        << format_coord(plot_w) << "\" height=\"" << format_coord(plot_h)
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    svg << "    <text x=\"" << format_coord(x0 - 6) << "\" y=\"" << format_coord(y0 + 4)
        << "\" text-anchor=\"end\">" << format_coord(max_score) << "</text>\n";
    svg << "    <text x=\"" << format_coord(x0 - 6) << "\" y=\"" << format_coord(y0 + plot_h + 4)
        << "\" text-anchor=\"end\">" << format_coord(min_score) << "</text>\n";
    for (int idx = 1; idx <= max_index; ++idx) {
      svg << "    <text x=\"" << format_coord(sx(idx)) << "\" y=\""
          << format_coord(y0 + plot_h + 16) << "\" text-anchor=\"middle\">" << idx << "</text>\n";
    }

    for (const auto& [condition, points] : by_condition) {
      const char* color = condition == "guided" ? "#1f77b4" : "#d62728";
      svg << "    <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0) svg << ' ';
        svg << format_coord(sx(points[i].first)) << ',' << format_coord(sy(points[i].second));
      }
      svg << "\"/>\n";
      for (const auto& [idx, score] : points) {
        svg << "    <circle cx=\"" << format_coord(sx(idx)) << "\" cy=\""
            << format_coord(sy(score)) << "\" r=\"2\" fill=\"" << color << "\"/>\n";
      }
    }
    svg << "  </g>\n";
    ++panel_index;
  }

  // Legend
  const double ly = kPanelH + 14.0;
  svg << "  <g class=\"legend\">\n";
  svg << "    <line x1=\"" << format_coord(kMarginL) << "\" y1=\"" << format_coord(ly)
      << "\" x2=\"" << format_coord(kMarginL + 24) << "\" y2=\"" << format_coord(ly)
      << "\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
  svg << "    <text x=\"" << format_coord(kMarginL + 30) << "\" y=\"" << format_coord(ly + 4)
      << "\">guided</text>\n";
  svg << "    <line x1=\"" << format_coord(kMarginL + 90) << "\" y1=\"" << format_coord(ly)
      << "\" x2=\"" << format_coord(kMarginL + 114) << "\" y2=\"" << format_coord(ly)
      << "\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  svg << "    <text x=\"" << format_coord(kMarginL + 120) << "\" y=\"" << format_coord(ly + 4)
      << "\">unguided</text>\n";
  svg << "  </g>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_report_chart(const HomogeneityReport& report, const std::filesystem::path& path) {
  atomic_write(path, render_report_chart(report));
}

}  // namespace fable
