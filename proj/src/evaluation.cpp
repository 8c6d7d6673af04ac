#include "gridguard/evaluation.hpp"

#include "gridguard/error.hpp"
#include "gridguard/rng.hpp"

#include <cmath>
#include <cstdio>

namespace gridguard {

std::size_t ConfusionMatrix::total() const {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size())
        throw ValidationError("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                              std::to_string(y_pred.size()) + " predictions");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1))
            throw ValidationError("confusion: labels must be 0 or 1");
        ++m.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    return m;
}

ScoreReport scores(const ConfusionMatrix& matrix) {
    const auto total = matrix.total();
    if (total == 0) throw ValidationError("scores: empty confusion matrix");
    ScoreReport r;
    r.matrix = matrix;
    const auto& c = matrix.counts;
    for (std::size_t k = 0; k < 2; ++k) {
        const double tp = static_cast<double>(c[k][k]);
        const double predicted = static_cast<double>(c[0][k] + c[1][k]);
        const double actual = static_cast<double>(c[k][0] + c[k][1]);
        r.precision[k] = predicted > 0 ? tp / predicted : 0.0;
        r.recall[k] = actual > 0 ? tp / actual : 0.0;
        const double pr = r.precision[k] + r.recall[k];
        r.f1[k] = pr > 0 ? 2.0 * r.precision[k] * r.recall[k] / pr : 0.0;
    }
    r.accuracy = static_cast<double>(c[0][0] + c[1][1]) / static_cast<double>(total);
    r.precision_macro = (r.precision[0] + r.precision[1]) / 2.0;
    r.recall_macro = (r.recall[0] + r.recall[1]) / 2.0;
    r.f1_macro = (r.f1[0] + r.f1[1]) / 2.0;
    return r;
}

void to_json(nlohmann::json& j, const ScoreReport& r) {
    j = nlohmann::json{
        {"accuracy", r.accuracy},
        {"precision_macro", r.precision_macro},
        {"recall_macro", r.recall_macro},
        {"f1_macro", r.f1_macro},
        {"per_class", {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}}},
        {"confusion", r.matrix.counts},
        {"dataset", r.meta.dataset},
        {"model", r.meta.model},
        {"hyperparameters", r.meta.hyperparameters},
    };
}

std::string score_csv_row(const std::string& param, const ScoreReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g", param.c_str(), r.accuracy,
                  r.precision_macro, r.recall_macro, r.f1_macro);
    return buf;
}

namespace {

std::array<std::vector<std::size_t>, 2> members_by_class(std::span<const int> labels) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw ValidationError("labels must be 0 or 1");
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    return by_class;
}

}  // namespace

Split train_test_split(std::span<const int> labels, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("split ratio must lie in (0, 1)");
    auto by_class = members_by_class(labels);
    Rng rng(seed);
    Split split;
    for (std::size_t k = 0; k < 2; ++k) {
        auto& members = by_class[k];
        if (members.size() < 2)
            throw ValidationError("class " + std::to_string(k) + " has fewer than 2 samples");
        rng.shuffle(members);
        const auto n_test = static_cast<std::size_t>(
            std::floor(ratio * static_cast<double>(members.size()) + 0.5));
        split.test.insert(split.test.end(), members.begin(),
                          members.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test),
                           members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<Split> kfold(std::span<const int> labels, int k, std::uint64_t seed, double ratio) {
    if (k < 1) throw ValidationError("k folds must be >= 1");
    if (k == 1) return {train_test_split(labels, ratio, seed)};

    auto by_class = members_by_class(labels);
    for (std::size_t c = 0; c < 2; ++c)
        if (by_class[c].size() < static_cast<std::size_t>(k))
            throw ValidationError("k = " + std::to_string(k) + " exceeds the size of class " +
                                  std::to_string(c) + " (" + std::to_string(by_class[c].size()) + ")");

    Rng rng(seed);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    std::size_t dealt = 0;
    for (auto& members : by_class) {
        rng.shuffle(members);
        for (auto i : members) folds[dealt++ % folds.size()].push_back(i);
    }

    std::vector<Split> splits(folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
        splits[f].test = folds[f];
        for (std::size_t g = 0; g < folds.size(); ++g)
            if (g != f) splits[f].train.insert(splits[f].train.end(), folds[g].begin(), folds[g].end());
        std::sort(splits[f].train.begin(), splits[f].train.end());
        std::sort(splits[f].test.begin(), splits[f].test.end());
    }
    return splits;
}

int warmup_epochs(int total_epochs, double warmup_fraction) {
    // the 1e-9 guard keeps e.g. 0.1 * 20 from rounding up to 3
    return static_cast<int>(std::ceil(warmup_fraction * total_epochs - 1e-9));
}

double lr_schedule(int epoch, int total_epochs, double base_lr, double warmup_fraction) {
    if (epoch < 1 || epoch > total_epochs)
        throw ValidationError("epoch must lie in [1, total_epochs]");
    const int w = warmup_epochs(total_epochs, warmup_fraction);
    if (w > 0 && epoch <= w) return base_lr * epoch / w;
    return base_lr;
}

std::optional<double> GridSearchResult::best_value() const {
    if (!best) return std::nullopt;
    return rows[*best].value;
}

GridSearchResult grid_search(const GridSearchSpec& spec,
                             const std::function<ScoreReport(double)>& evaluator) {
    if (spec.values.empty()) throw ValidationError("grid search needs at least one value");
    GridSearchResult result;
    for (const double value : spec.values) {
        GridSearchRow row;
        row.value = value;
        try {
            row.report = evaluator(value);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        result.rows.push_back(std::move(row));
        const auto& added = result.rows.back();
        if (added.report &&
            (!result.best || added.report->f1_macro > result.rows[*result.best].report->f1_macro))
            result.best = result.rows.size() - 1;
    }
    return result;
}

}  // namespace gridguard
