#pragma once

#include "gridguard/evaluation.hpp"

#include <string>
#include <utility>
#include <vector>

namespace gridguard {

struct Bar {
    std::string label;
    double value = 0.0;
};

struct Series {
    std::string name;
    std::vector<double> values;
};

/// Standalone SVG documents; text is XML-escaped.
std::string svg_bar_chart(const std::string& title, const std::vector<Bar>& bars);
std::string svg_line_plot(const std::string& title, const std::vector<Series>& series);

/// "label,value" rows.
std::string bars_csv(const std::vector<Bar>& bars);
/// "index,<series names...>" rows; shorter series leave empty cells.
std::string series_csv(const std::vector<Series>& series);

std::string xml_escape(const std::string& text);

/// Writes text to a file, creating parent folders. Throws RuntimeFailure on
/// I/O errors.
void write_text(const std::string& path, const std::string& text);

/// Writes `<stem>.svg` and `<stem>.csv` into `folder`; returns both paths.
std::vector<std::string> emit_bar_chart(const std::string& folder, const std::string& stem,
                                        const std::string& title, const std::vector<Bar>& bars);
std::vector<std::string> emit_line_plot(const std::string& folder, const std::string& stem,
                                        const std::string& title, const std::vector<Series>& series);

/// `<stem>.json` with the report and `<stem>.csv` with a single score row.
std::vector<std::string> emit_score_report(const std::string& folder, const std::string& stem,
                                           const std::string& param, const ScoreReport& report);

/// Grid-search rows: `<stem>.csv` (one row per value), `<stem>.json`, and a
/// macro-F1 bar chart `<stem>_f1.svg` + `<stem>_f1_data.csv`.
std::vector<std::string> emit_grid_search(const std::string& folder, const std::string& stem,
                                          const GridSearchSpec& spec, const GridSearchResult& result);

}  // namespace gridguard
