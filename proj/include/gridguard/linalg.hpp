#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gridguard {

/// Small dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    const std::vector<double>& data() const { return data_; }

    Matrix transpose() const;
    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);

struct EigenDecomposition {
    std::vector<double> values;  ///< descending
    Matrix vectors;              ///< column k pairs with values[k]
    int sweeps = 0;
    double off_norm = 0.0;       ///< off-diagonal Frobenius norm at exit
};

/// Cyclic Jacobi rotations on a symmetric matrix until the off-diagonal
/// Frobenius norm drops below `tolerance` (or `max_sweeps` is hit).
EigenDecomposition jacobi_eigen(const Matrix& symmetric, double tolerance = 1e-12,
                                int max_sweeps = 100);

/// Solves A x = b for symmetric positive definite A. Returns false when a
/// pivot is not positive.
bool cholesky_solve(const Matrix& a, std::span<const double> b, std::vector<double>& x);

}  // namespace gridguard
