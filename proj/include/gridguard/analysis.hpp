#pragma once

#include "gridguard/linalg.hpp"

#include <string>
#include <vector>

namespace gridguard {

struct PcaModel {
    std::vector<double> mean;
    Matrix components;  ///< one orthonormal row per component, by eigenvalue descending
    std::vector<double> eigenvalues;          ///< of the kept components
    std::vector<double> explained_ratio;      ///< eigenvalue / total variance
    double total_variance = 0.0;
};

/// Centers by column means and eigendecomposes the sample covariance
/// (n - 1 denominator) with cyclic Jacobi. Each component's largest-magnitude
/// entry is made positive.
PcaModel pca_fit(const Matrix& x, std::size_t n_components);

/// Smallest number of leading components whose explained ratios reach
/// `fraction`.
std::size_t components_for_variance(const PcaModel& full_model, double fraction);

/// (x - mean) * components^T
Matrix pca_transform(const PcaModel& model, const Matrix& x);
/// scores * components + mean
Matrix pca_inverse_transform(const PcaModel& model, const Matrix& scores);

enum class Linkage { Single, Complete, Average };

Linkage parse_linkage(const std::string& text);

struct Merge {
    std::size_t a = 0;  ///< cluster ids: leaves are 0..n-1, merge k creates n+k
    std::size_t b = 0;  ///< a < b
    double distance = 0.0;
};

struct Dendrogram {
    std::size_t leaf_count = 0;
    std::vector<Merge> merges;
};

/// Agglomerative clustering on Euclidean distances. Among equal distances the
/// pair with the smallest (a, b) cluster ids merges first.
Dendrogram hierarchical_cluster(const Matrix& x, Linkage linkage = Linkage::Average);

/// Undoes the last k - 1 merges. Labels number clusters in order of first
/// appearance over the leaves.
std::vector<int> cut_dendrogram(const Dendrogram& dendrogram, std::size_t k);

/// "step,cluster_a,cluster_b,distance" rows.
std::string dendrogram_csv(const Dendrogram& dendrogram);

}  // namespace gridguard
