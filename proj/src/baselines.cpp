#include "gridguard/baselines.hpp"

#include "gridguard/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace gridguard {

std::array<double, kSummaryFeatures> feature_summary(std::span<const double> series) {
    if (series.size() < 2) throw ValidationError("feature_summary needs at least 2 values");
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    if (*lo == *hi) return {*lo, 0.0, *lo, *hi, 0.0};

    const double n = static_cast<double>(series.size());
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
    double ss = 0.0;
    double lag = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const double d = series[t] - mean;
        ss += d * d;
        if (t + 1 < series.size()) lag += d * (series[t + 1] - mean);
    }
    return {mean, std::sqrt(ss / n), *lo, *hi, ss > 0.0 ? lag / ss : 0.0};
}

StandardScaler StandardScaler::fit(const Matrix& x) {
    StandardScaler s;
    s.mean.assign(x.cols(), 0.0);
    s.std.assign(x.cols(), 0.0);
    if (x.rows() == 0) return s;
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) s.mean[c] += x(r, c);
    for (auto& m : s.mean) m /= static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double d = x(r, c) - s.mean[c];
            s.std[c] += d * d;
        }
    for (auto& v : s.std) v = std::sqrt(v / static_cast<double>(x.rows()));
    return s;
}

Matrix StandardScaler::transform(const Matrix& x) const {
    if (x.cols() != mean.size()) throw ValidationError("scaler width mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c)
            out(r, c) = std[c] < 1e-12 ? 0.0 : (x(r, c) - mean[c]) / std[c];
    return out;
}

double LogisticModel::probability(std::span<const double> x) const {
    if (x.size() != weights.size()) throw ValidationError("logistic feature width mismatch");
    double z = intercept;
    for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
    return 1.0 / (1.0 + std::exp(-z));
}

LogisticModel logistic_fit(const Matrix& features, std::span<const int> labels, double lr,
                           int epochs, double l2) {
    if (features.rows() != labels.size()) throw ValidationError("logistic: rows and labels differ");
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw ValidationError("logistic: labels must be 0 or 1");
        positives += static_cast<std::size_t>(y);
    }
    if (positives == 0 || positives == labels.size())
        throw ValidationError("logistic: both classes are required");

    const auto d = features.cols();
    const double n = static_cast<double>(features.rows());
    LogisticModel m{std::vector<double>(d, 0.0), 0.0};
    std::vector<double> gw(d);
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t r = 0; r < features.rows(); ++r) {
            const double err = m.probability(features.row(r)) - labels[r];
            for (std::size_t c = 0; c < d; ++c) gw[c] += err * features(r, c);
            gb += err;
        }
        for (std::size_t c = 0; c < d; ++c) m.weights[c] -= lr * (gw[c] / n + l2 * m.weights[c]);
        m.intercept -= lr * gb / n;
    }
    return m;
}

int logistic_predict(const LogisticModel& model, std::span<const double> x) {
    return model.predict(x);
}

int knn_predict(const Matrix& train, std::span<const int> labels, std::size_t k,
                std::span<const double> x) {
    if (train.rows() == 0) throw ValidationError("knn: empty training set");
    if (labels.size() != train.rows()) throw ValidationError("knn: rows and labels differ");
    if (k < 1 || k > train.rows()) throw ValidationError("knn: k must lie in [1, training size]");
    if (x.size() != train.cols()) throw ValidationError("knn: query width mismatch");

    std::vector<std::pair<double, std::size_t>> dist(train.rows());
    for (std::size_t r = 0; r < train.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) {
            const double d = train(r, c) - x[c];
            s += d * d;
        }
        dist[r] = {s, r};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<int> votes;
    for (std::size_t i = 0; i < k; ++i) votes.push_back(labels[dist[i].second]);
    return majority_vote(votes);
}

std::vector<int> knn_predict_batch_serial(const Matrix& train, std::span<const int> labels,
                                          std::size_t k, const Matrix& queries) {
    std::vector<int> out(queries.rows());
    for (std::size_t q = 0; q < queries.rows(); ++q) out[q] = knn_predict(train, labels, k, queries.row(q));
    return out;
}

std::vector<int> knn_predict_batch(const Matrix& train, std::span<const int> labels, std::size_t k,
                                   const Matrix& queries, int workers) {
    // validate once up front so no exception escapes the parallel region
    if (queries.rows() > 0) knn_predict(train, labels, k, queries.row(0));
    std::vector<int> out(queries.rows());
    const auto n = static_cast<long>(queries.rows());
#pragma omp parallel for num_threads(workers < 1 ? 1 : workers) schedule(static)
    for (long q = 0; q < n; ++q)
        out[static_cast<std::size_t>(q)] =
            knn_predict(train, labels, k, queries.row(static_cast<std::size_t>(q)));
    return out;
}

int majority_vote(std::span<const int> labels) {
    if (labels.empty()) throw ValidationError("majority_vote: no labels");
    std::map<int, std::size_t> counts;
    for (int l : labels) ++counts[l];
    int best = labels.front();
    std::size_t best_count = 0;
    bool tie = false;
    for (const auto& [label, count] : counts) {
        if (count > best_count) {
            best = label;
            best_count = count;
            tie = false;
        } else if (count == best_count) {
            tie = true;
        }
    }
    return tie ? 1 : best;
}

}  // namespace gridguard
