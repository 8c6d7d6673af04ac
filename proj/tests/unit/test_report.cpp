#include "doctest.h"

#include "fixtures.hpp"
#include "gridguard/report.hpp"

#include <filesystem>
#include <vector>

using namespace gridguard;

namespace {

// Tag-balance check: every element closes in order, attributes are quoted,
// and no raw '<' or '&' leaks into text.
bool well_formed(const std::string& doc) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    bool root_seen = false;
    while (i < doc.size()) {
        if (doc[i] == '&') {
            const auto semi = doc.find(';', i);
            if (semi == std::string::npos || semi - i > 6) return false;
            i = semi + 1;
            continue;
        }
        if (doc[i] != '<') {
            ++i;
            continue;
        }
        const auto close = doc.find('>', i);
        if (close == std::string::npos) return false;
        std::string tag = doc.substr(i + 1, close - i - 1);
        i = close + 1;
        if (tag.starts_with("?") || tag.starts_with("!")) continue;
        if (tag.find('<') != std::string::npos) return false;
        std::size_t quotes = 0;
        for (char c : tag) quotes += c == '"';
        if (quotes % 2 != 0) return false;
        if (tag.starts_with("/")) {
            if (stack.empty() || stack.back() != tag.substr(1)) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.ends_with("/");
        const auto name = tag.substr(0, tag.find_first_of(" /"));
        if (stack.empty()) {
            if (root_seen) return false;
            root_seen = true;
        }
        if (!self_closing) stack.push_back(name);
    }
    return root_seen && stack.empty();
}

}  // namespace

TEST_CASE("bar charts are well-formed SVG") {
    std::vector<Bar> bars;
    const std::vector<double> rates{0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1};
    for (double r : rates) bars.push_back({std::to_string(r), r * 0.8});
    const auto svg = svg_bar_chart("F1 by calibration rate", bars);
    CHECK(well_formed(svg));
    CHECK(svg.find("<svg") != std::string::npos);
    std::size_t rects = 0;
    for (auto p = svg.find("<rect"); p != std::string::npos; p = svg.find("<rect", p + 1)) ++rects;
    CHECK(rects >= 12);
    const auto csv = bars_csv(bars);
    CHECK(csv.rfind("label,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
}

TEST_CASE("text is escaped") {
    CHECK(xml_escape("a<b & \"c\" > 'd'") == "a&lt;b &amp; &quot;c&quot; &gt; &apos;d&apos;");
    const auto svg = svg_bar_chart("<script>&", {{"x<y", 1.0}});
    CHECK(well_formed(svg));
    CHECK(svg.find("<script>") == std::string::npos);
}

TEST_CASE("line plots") {
    const std::vector<Series> s{{"a", {1, 2, 3}}, {"b", {0.5}}};
    CHECK(well_formed(svg_line_plot("windows", s)));
    CHECK(well_formed(svg_line_plot("empty", {})));
    CHECK(series_csv(s) == "index,a,b\n0,1,0.5\n1,2,\n2,3,\n");
}

TEST_CASE("emitters write the files they return") {
    const auto dir = fixture::temp_dir("report_emit");
    auto paths = emit_bar_chart(dir + "/nested", "bars", "t", {{"x", 1.0}});
    GridSearchSpec spec{"calibration_rate", {0.0, 0.5}};
    GridSearchResult result;
    result.rows.push_back({0.0, std::nullopt, "failed"});
    ConfusionMatrix m;
    m.counts = {{{2, 1}, {1, 2}}};
    result.rows.push_back({0.5, scores(m), ""});
    result.best = 1;
    const auto more = emit_grid_search(dir, "gs", spec, result);
    paths.insert(paths.end(), more.begin(), more.end());
    const auto score_paths = emit_score_report(dir, "score", "p", scores(m));
    paths.insert(paths.end(), score_paths.begin(), score_paths.end());
    for (const auto& p : paths) CHECK(std::filesystem::exists(p));
    CHECK(std::filesystem::exists(dir + "/gs_f1.svg"));
    const auto csv = fixture::read_file(dir + "/score.csv");
    CHECK(csv.rfind(kScoreCsvHeader, 0) == 0);
    CHECK(csv.back() == '\n');
    CHECK(well_formed(fixture::read_file(dir + "/gs_f1.svg")));
}
