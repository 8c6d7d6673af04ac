#pragma once

#include "gridguard/linalg.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gridguard {

struct LinearModel {
    std::vector<double> weights;
    double intercept = 0.0;
    bool ridge_applied = false;  ///< near-singular Gram matrix was regularized
    double condition = 0.0;      ///< eigenvalue-ratio estimate of the Gram matrix

    double predict(std::span<const double> x) const;
};

/// Ordinary least squares with intercept through the normal equations. When
/// the Gram matrix condition estimate exceeds 1e12, 1e-8 is added to its
/// diagonal so a finite solution always exists.
LinearModel ols_fit(const Matrix& x, std::span<const double> y);

struct MlpConfig {
    std::size_t hidden = 32;
    int epochs = 200;
    double lr = 0.01;
    std::size_t batch_size = 16;
    double warmup_fraction = 0.1;
    std::uint64_t seed = 0;
};

/// One tanh hidden layer and a linear output layer. Inputs and targets are
/// z-scored internally with statistics from the training data.
struct MlpRegressor {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    std::size_t outputs = 0;
    std::vector<double> w1, b1, w2, b2;  ///< w1: hidden x inputs, w2: outputs x hidden
    std::vector<double> x_mean, x_std, y_mean, y_std;

    std::vector<double> predict(std::span<const double> x) const;
};

/// Minibatch SGD on mean squared error with the warm-up schedule. Output
/// weights start uniform in [-0.1, 0.1]; hidden weights in +-1/sqrt(inputs),
/// hidden biases in [-1, 1]. Throws RuntimeFailure on a non-finite loss.
MlpRegressor mlp_fit(const Matrix& x, const Matrix& y, const MlpConfig& config);

Matrix mlp_predict(const MlpRegressor& model, const Matrix& x);

/// Root mean squared error over all entries.
double rmse(const Matrix& predicted, const Matrix& truth);
double rmse(std::span<const double> predicted, std::span<const double> truth);

}  // namespace gridguard
