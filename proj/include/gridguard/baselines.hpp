#pragma once

#include "gridguard/linalg.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace gridguard {

inline constexpr std::size_t kSummaryFeatures = 5;

/// [mean, population std, min, max, lag-1 autocorrelation]. A constant
/// series has std 0 and autocorrelation 0. Needs at least 2 values.
std::array<double, kSummaryFeatures> feature_summary(std::span<const double> series);

/// Column-wise z-scoring fitted on one matrix and reusable on others.
struct StandardScaler {
    std::vector<double> mean;
    std::vector<double> std;

    static StandardScaler fit(const Matrix& x);
    Matrix transform(const Matrix& x) const;
};

struct LogisticModel {
    std::vector<double> weights;
    double intercept = 0.0;

    double probability(std::span<const double> x) const;
    int predict(std::span<const double> x) const { return probability(x) >= 0.5 ? 1 : 0; }
};

/// Full-batch gradient descent on mean cross-entropy + (l2/2)*|w|^2, starting
/// from zero weights. Throws when only one class is present.
LogisticModel logistic_fit(const Matrix& features, std::span<const int> labels, double lr,
                           int epochs, double l2 = 1e-4);

int logistic_predict(const LogisticModel& model, std::span<const double> x);

/// k nearest neighbours by Euclidean distance (ties in distance go to the
/// lower training index); majority label, an exact vote tie goes to 1.
int knn_predict(const Matrix& train, std::span<const int> labels, std::size_t k,
                std::span<const double> x);

/// Reference batch prediction on the calling thread.
std::vector<int> knn_predict_batch_serial(const Matrix& train, std::span<const int> labels,
                                          std::size_t k, const Matrix& queries);

/// OpenMP batch prediction over query rows; identical output to the serial form.
std::vector<int> knn_predict_batch(const Matrix& train, std::span<const int> labels, std::size_t k,
                                   const Matrix& queries, int workers);

/// Most frequent label; an exact tie returns 1.
int majority_vote(std::span<const int> labels);

}  // namespace gridguard
