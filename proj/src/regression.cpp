#include "gridguard/regression.hpp"

#include "gridguard/error.hpp"
#include "gridguard/evaluation.hpp"
#include "gridguard/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gridguard {

double LinearModel::predict(std::span<const double> x) const {
    if (x.size() != weights.size()) throw ValidationError("linear model width mismatch");
    double y = intercept;
    for (std::size_t i = 0; i < x.size(); ++i) y += weights[i] * x[i];
    return y;
}

LinearModel ols_fit(const Matrix& x, std::span<const double> y) {
    if (x.rows() == 0) throw ValidationError("ols_fit needs at least one row");
    if (y.size() != x.rows()) throw ValidationError("ols_fit: rows and targets differ");
    const auto d = x.cols() + 1;  // intercept first

    Matrix gram(d, d);
    std::vector<double> rhs(d, 0.0);
    std::vector<double> row(d);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        row[0] = 1.0;
        for (std::size_t c = 0; c < x.cols(); ++c) row[c + 1] = x(r, c);
        for (std::size_t i = 0; i < d; ++i) {
            rhs[i] += row[i] * y[r];
            for (std::size_t j = 0; j < d; ++j) gram(i, j) += row[i] * row[j];
        }
    }

    LinearModel model;
    const auto eig = jacobi_eigen(gram);
    const double largest = eig.values.front();
    const double smallest = eig.values.back();
    model.condition = smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
    if (model.condition > 1e12) {
        model.ridge_applied = true;
        for (std::size_t i = 0; i < d; ++i) gram(i, i) += 1e-8;
    }

    std::vector<double> beta;
    if (!cholesky_solve(gram, rhs, beta)) {
        // extremely degenerate designs: fall back to the regularized system
        model.ridge_applied = true;
        for (std::size_t i = 0; i < d; ++i) gram(i, i) += 1e-8;
        if (!cholesky_solve(gram, rhs, beta)) throw RuntimeFailure("ols_fit: normal equations are singular");
    }
    model.intercept = beta[0];
    model.weights.assign(beta.begin() + 1, beta.end());
    return model;
}

namespace {

void column_stats(const Matrix& m, std::vector<double>& mean, std::vector<double>& stdev) {
    mean.assign(m.cols(), 0.0);
    stdev.assign(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += m(r, c);
    for (auto& v : mean) v /= static_cast<double>(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double d = m(r, c) - mean[c];
            stdev[c] += d * d;
        }
    // a constant column is passed through centered
    for (auto& v : stdev) {
        v = std::sqrt(v / static_cast<double>(m.rows()));
        if (v < 1e-12) v = 1.0;
    }
}

}  // namespace

std::vector<double> MlpRegressor::predict(std::span<const double> x) const {
    if (x.size() != inputs) throw ValidationError("mlp input width mismatch");
    std::vector<double> h(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
        double a = b1[j];
        for (std::size_t i = 0; i < inputs; ++i) a += w1[j * inputs + i] * (x[i] - x_mean[i]) / x_std[i];
        h[j] = std::tanh(a);
    }
    std::vector<double> y(outputs);
    for (std::size_t o = 0; o < outputs; ++o) {
        double a = b2[o];
        for (std::size_t j = 0; j < hidden; ++j) a += w2[o * hidden + j] * h[j];
        y[o] = a * y_std[o] + y_mean[o];
    }
    return y;
}

MlpRegressor mlp_fit(const Matrix& x, const Matrix& y, const MlpConfig& config) {
    if (x.rows() == 0 || x.rows() != y.rows()) throw ValidationError("mlp_fit: inconsistent rows");
    if (config.hidden == 0 || config.epochs < 1 || config.batch_size == 0 || !(config.lr > 0.0))
        throw ValidationError("mlp_fit: invalid configuration");

    MlpRegressor m;
    m.inputs = x.cols();
    m.hidden = config.hidden;
    m.outputs = y.cols();
    column_stats(x, m.x_mean, m.x_std);
    column_stats(y, m.y_mean, m.y_std);

    Rng rng(config.seed);
    auto init = [&](std::vector<double>& v, std::size_t n, double limit) {
        v.resize(n);
        for (auto& w : v) w = rng.uniform(-limit, limit);
    };
    // hidden layer: fan-in scaled weights, biases in [-1, 1]; output layer: [-0.1, 0.1]
    const double hidden_limit = 1.0 / std::sqrt(static_cast<double>(m.inputs));
    init(m.w1, m.hidden * m.inputs, hidden_limit);
    init(m.b1, m.hidden, 1.0);
    init(m.w2, m.outputs * m.hidden, 0.1);
    init(m.b2, m.outputs, 0.1);

    const auto n = x.rows();
    Matrix xs(n, m.inputs), ys(n, m.outputs);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m.inputs; ++c) xs(r, c) = (x(r, c) - m.x_mean[c]) / m.x_std[c];
        for (std::size_t c = 0; c < m.outputs; ++c) ys(r, c) = (y(r, c) - m.y_mean[c]) / m.y_std[c];
    }

    std::vector<double> gw1(m.w1.size()), gb1(m.b1.size()), gw2(m.w2.size()), gb2(m.b2.size());
    std::vector<double> h(m.hidden), dh(m.hidden), out(m.outputs);
    std::vector<std::size_t> order(n);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double lr = lr_schedule(epoch, config.epochs, config.lr, config.warmup_fraction);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffler(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        shuffler.shuffle(order);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const auto stop = std::min(n, start + config.batch_size);
            std::fill(gw1.begin(), gw1.end(), 0.0);
            std::fill(gb1.begin(), gb1.end(), 0.0);
            std::fill(gw2.begin(), gw2.end(), 0.0);
            std::fill(gb2.begin(), gb2.end(), 0.0);
            double loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const auto r = order[k];
                for (std::size_t j = 0; j < m.hidden; ++j) {
                    double a = m.b1[j];
                    for (std::size_t i = 0; i < m.inputs; ++i) a += m.w1[j * m.inputs + i] * xs(r, i);
                    h[j] = std::tanh(a);
                }
                std::fill(dh.begin(), dh.end(), 0.0);
                for (std::size_t o = 0; o < m.outputs; ++o) {
                    double a = m.b2[o];
                    for (std::size_t j = 0; j < m.hidden; ++j) a += m.w2[o * m.hidden + j] * h[j];
                    const double err = a - ys(r, o);
                    loss += err * err;
                    // d/da of mean over outputs of err^2
                    const double g = 2.0 * err / static_cast<double>(m.outputs);
                    gb2[o] += g;
                    for (std::size_t j = 0; j < m.hidden; ++j) {
                        gw2[o * m.hidden + j] += g * h[j];
                        dh[j] += g * m.w2[o * m.hidden + j];
                    }
                }
                for (std::size_t j = 0; j < m.hidden; ++j) {
                    const double g = dh[j] * (1.0 - h[j] * h[j]);
                    gb1[j] += g;
                    for (std::size_t i = 0; i < m.inputs; ++i) gw1[j * m.inputs + i] += g * xs(r, i);
                }
            }
            if (!std::isfinite(loss))
                throw RuntimeFailure("mlp_fit: non-finite loss at epoch " + std::to_string(epoch));
            const double step = lr / static_cast<double>(stop - start);
            for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= step * gw1[i];
            for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= step * gb1[i];
            for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= step * gw2[i];
            for (std::size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= step * gb2[i];
        }
    }
    return m;
}

Matrix mlp_predict(const MlpRegressor& model, const Matrix& x) {
    Matrix out(x.rows(), model.outputs);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto y = model.predict(x.row(r));
        std::copy(y.begin(), y.end(), out.row(r).begin());
    }
    return out;
}

double rmse(std::span<const double> predicted, std::span<const double> truth) {
    if (predicted.size() != truth.size() || truth.empty())
        throw ValidationError("rmse: sizes differ or are empty");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = predicted[i] - truth[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(truth.size()));
}

double rmse(const Matrix& predicted, const Matrix& truth) {
    if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
        throw ValidationError("rmse: shapes differ");
    return rmse(std::span<const double>(predicted.data()), std::span<const double>(truth.data()));
}

}  // namespace gridguard
