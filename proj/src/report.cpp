#include "gridguard/report.hpp"

#include "gridguard/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace gridguard {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string header(const std::string& title) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
           num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n" +
           "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" fill=\"white\"/>\n" + "<text x=\"" + num(kWidth / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
           xml_escape(title) + "</text>\n";
}

std::string axes(double lo, double hi) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    std::string s = "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" +
                    num(y0) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) +
         "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        const double y = y0 - (y0 - y1) * i / 4.0;
        char label[40];
        std::snprintf(label, sizeof label, "%.3g", v);
        s += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(y + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + label + "</text>\n";
    }
    return s;
}

std::pair<double, double> value_range(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
    if (hi - lo < 1e-12) return {lo - 0.5, hi + 0.5};
    return {lo, hi};
}

}  // namespace

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string svg_bar_chart(const std::string& title, const std::vector<Bar>& bars) {
    double hi = 0.0, lo = 0.0;
    for (const auto& b : bars)
        if (std::isfinite(b.value)) hi = std::max(hi, b.value), lo = std::min(lo, b.value);
    if (hi - lo < 1e-12) hi = lo + 1.0;
    std::string s = header(title) + axes(lo, hi);
    const double x0 = kLeft, y0 = kHeight - kBottom;
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    const double slot = bars.empty() ? plot_w : plot_w / static_cast<double>(bars.size());
    const double zero_y = y0 - plot_h * (0.0 - lo) / (hi - lo);
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double v = std::isfinite(bars[i].value) ? bars[i].value : 0.0;
        const double y = y0 - plot_h * (v - lo) / (hi - lo);
        const double x = x0 + slot * (static_cast<double>(i) + 0.15);
        s += "<rect class=\"bar\" x=\"" + num(x) + "\" y=\"" + num(std::min(y, zero_y)) + "\" width=\"" +
             num(slot * 0.7) + "\" height=\"" + num(std::abs(zero_y - y)) + "\" fill=\"" + kPalette[0] +
             "\"><title>" + xml_escape(bars[i].label) + ": " + full(bars[i].value) + "</title></rect>\n";
        s += "<text x=\"" + num(x + slot * 0.35) + "\" y=\"" + num(y0 + 16) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
             xml_escape(bars[i].label) + "</text>\n";
    }
    return s + "</svg>\n";
}

std::string svg_line_plot(const std::string& title, const std::vector<Series>& series) {
    double lo = INFINITY, hi = -INFINITY;
    std::size_t longest = 0;
    for (const auto& se : series) {
        longest = std::max(longest, se.values.size());
        for (double v : se.values)
            if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    }
    std::tie(lo, hi) = value_range(lo, hi);
    std::string s = header(title) + axes(lo, hi);
    const double x0 = kLeft, y0 = kHeight - kBottom;
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    const double dx = longest > 1 ? plot_w / static_cast<double>(longest - 1) : 0.0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        std::string points;
        for (std::size_t i = 0; i < series[k].values.size(); ++i) {
            const double v = series[k].values[i];
            if (!std::isfinite(v)) continue;
            points += num(x0 + dx * static_cast<double>(i)) + "," + num(y0 - plot_h * (v - lo) / (hi - lo)) + " ";
        }
        const char* color = kPalette[k % std::size(kPalette)];
        s += "<polyline class=\"series\" fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1\" points=\"" + points + "\"/>\n";
        s += "<text x=\"" + num(kWidth - kRight - 4) + "\" y=\"" + num(kTop + 14.0 * static_cast<double>(k)) +
             "\" text-anchor=\"end\" fill=\"" + color + "\" font-family=\"sans-serif\" font-size=\"11\">" +
             xml_escape(series[k].name) + "</text>\n";
    }
    return s + "</svg>\n";
}

std::string bars_csv(const std::vector<Bar>& bars) {
    std::string out = "label,value\n";
    for (const auto& b : bars) out += b.label + "," + full(b.value) + "\n";
    return out;
}

std::string series_csv(const std::vector<Series>& series) {
    std::string out = "index";
    std::size_t longest = 0;
    for (const auto& s : series) {
        out += "," + s.name;
        longest = std::max(longest, s.values.size());
    }
    out += "\n";
    for (std::size_t i = 0; i < longest; ++i) {
        out += std::to_string(i);
        for (const auto& s : series) out += "," + (i < s.values.size() ? full(s.values[i]) : std::string());
        out += "\n";
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::error_code ec;
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent, ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + path);
    out << text;
    if (!out) throw RuntimeFailure("write failed for " + path);
}

std::vector<std::string> emit_bar_chart(const std::string& folder, const std::string& stem,
                                        const std::string& title, const std::vector<Bar>& bars) {
    const auto svg = (fs::path(folder) / (stem + ".svg")).string();
    const auto csv = (fs::path(folder) / (stem + "_data.csv")).string();
    write_text(svg, svg_bar_chart(title, bars));
    write_text(csv, bars_csv(bars));
    return {svg, csv};
}

std::vector<std::string> emit_line_plot(const std::string& folder, const std::string& stem,
                                        const std::string& title, const std::vector<Series>& series) {
    const auto svg = (fs::path(folder) / (stem + ".svg")).string();
    const auto csv = (fs::path(folder) / (stem + "_data.csv")).string();
    write_text(svg, svg_line_plot(title, series));
    write_text(csv, series_csv(series));
    return {svg, csv};
}

std::vector<std::string> emit_score_report(const std::string& folder, const std::string& stem,
                                           const std::string& param, const ScoreReport& report) {
    const auto json_path = (fs::path(folder) / (stem + ".json")).string();
    const auto csv_path = (fs::path(folder) / (stem + ".csv")).string();
    nlohmann::json j = report;
    write_text(json_path, j.dump(2) + "\n");
    write_text(csv_path, std::string(kScoreCsvHeader) + "\n" + score_csv_row(param, report) + "\n");
    return {json_path, csv_path};
}

std::vector<std::string> emit_grid_search(const std::string& folder, const std::string& stem,
                                          const GridSearchSpec& spec, const GridSearchResult& result) {
    std::string csv = std::string(kScoreCsvHeader) + "\n";
    nlohmann::json j;
    j["parameter"] = spec.parameter;
    j["rows"] = nlohmann::json::array();
    std::vector<Bar> bars;
    for (const auto& row : result.rows) {
        char label[40];
        std::snprintf(label, sizeof label, "%g", row.value);
        nlohmann::json r{{"value", row.value}};
        if (row.report) {
            csv += score_csv_row(label, *row.report) + "\n";
            r["report"] = *row.report;
            bars.push_back({label, row.report->f1_macro});
        } else {
            csv += std::string(label) + ",nan,nan,nan,nan\n";
            r["error"] = row.error;
            bars.push_back({label, NAN});
        }
        j["rows"].push_back(r);
    }
    if (result.best) j["best_value"] = result.rows[*result.best].value;
    else j["best_value"] = nullptr;

    const auto csv_path = (fs::path(folder) / (stem + ".csv")).string();
    const auto json_path = (fs::path(folder) / (stem + ".json")).string();
    write_text(csv_path, csv);
    write_text(json_path, j.dump(2) + "\n");
    auto out = emit_bar_chart(folder, stem + "_f1", "macro F1 over " + spec.parameter, bars);
    out.insert(out.begin(), {csv_path, json_path});
    return out;
}

}  // namespace gridguard
