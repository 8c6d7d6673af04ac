#pragma once

#include "json.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridguard {

/// counts[true][predicted]
struct ConfusionMatrix {
    std::array<std::array<std::size_t, 2>, 2> counts{};

    std::size_t total() const;
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred);

struct RunMetadata {
    std::string dataset;
    std::string model;
    std::map<std::string, std::string> hyperparameters;

    bool operator==(const RunMetadata&) const = default;
};

struct ScoreReport {
    double accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    std::array<double, 2> precision{};
    std::array<double, 2> recall{};
    std::array<double, 2> f1{};
    ConfusionMatrix matrix;
    RunMetadata meta;

    bool operator==(const ScoreReport&) const = default;
};

/// Per-class precision/recall use 0 when the denominator is 0; macro values
/// are unweighted class means. Throws on an empty matrix.
ScoreReport scores(const ConfusionMatrix& matrix);

void to_json(nlohmann::json& j, const ScoreReport& report);

inline constexpr const char* kScoreCsvHeader = "param,accuracy,precision_macro,recall_macro,f1_macro";
std::string score_csv_row(const std::string& param, const ScoreReport& report);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified seeded split; each class contributes round(ratio * count)
/// test members. Throws if a class has fewer than 2 members.
Split train_test_split(std::span<const int> labels, double ratio, std::uint64_t seed);

/// k = 1: one train/test split at `ratio`. k > 1: stratified partition into
/// k folds whose sizes differ by at most one; fold i is the test side of
/// split i.
std::vector<Split> kfold(std::span<const int> labels, int k, std::uint64_t seed, double ratio = 0.3);

/// Number of warm-up epochs, ceil(fraction * total).
int warmup_epochs(int total_epochs, double warmup_fraction);

/// Linear warm-up from base/w at epoch 1 up to base at epoch w, then base.
double lr_schedule(int epoch, int total_epochs, double base_lr, double warmup_fraction);

struct GridSearchSpec {
    std::string parameter;
    std::vector<double> values;

    bool operator==(const GridSearchSpec&) const = default;
};

struct GridSearchRow {
    double value = 0.0;
    std::optional<ScoreReport> report;
    std::string error;
};

struct GridSearchResult {
    std::vector<GridSearchRow> rows;
    std::optional<std::size_t> best;  ///< index into rows; highest macro F1, earliest on ties

    std::optional<double> best_value() const;
};

/// Evaluates every value in order. An evaluator exception is recorded on its
/// row and the search continues.
GridSearchResult grid_search(const GridSearchSpec& spec,
                             const std::function<ScoreReport(double)>& evaluator);

}  // namespace gridguard
