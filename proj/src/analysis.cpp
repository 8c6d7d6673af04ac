#include "gridguard/analysis.hpp"

#include "gridguard/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

namespace gridguard {

PcaModel pca_fit(const Matrix& x, std::size_t n_components) {
    const auto n = x.rows();
    const auto d = x.cols();
    if (n < 2) throw ValidationError("pca_fit needs at least 2 rows");
    if (n_components < 1 || n_components > d)
        throw ValidationError("pca_fit: n_components must lie in [1, " + std::to_string(d) + "]");

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) model.mean[c] += x(r, c);
    for (auto& m : model.mean) m /= static_cast<double>(n);

    Matrix cov(d, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < d; ++i) {
            const double di = x(r, i) - model.mean[i];
            for (std::size_t j = i; j < d; ++j) cov(i, j) += di * (x(r, j) - model.mean[j]);
        }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) /= static_cast<double>(n - 1);
            cov(j, i) = cov(i, j);
        }

    const auto eig = jacobi_eigen(cov);
    for (std::size_t i = 0; i < d; ++i) model.total_variance += cov(i, i);

    model.components = Matrix(n_components, d);
    for (std::size_t k = 0; k < n_components; ++k) {
        std::size_t pivot = 0;
        for (std::size_t r = 1; r < d; ++r)
            if (std::abs(eig.vectors(r, k)) > std::abs(eig.vectors(pivot, k))) pivot = r;
        const double sign = eig.vectors(pivot, k) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < d; ++r) model.components(k, r) = sign * eig.vectors(r, k);
        model.eigenvalues.push_back(eig.values[k]);
        model.explained_ratio.push_back(model.total_variance > 0.0 ? eig.values[k] / model.total_variance
                                                                   : 0.0);
    }
    return model;
}

std::size_t components_for_variance(const PcaModel& full_model, double fraction) {
    double acc = 0.0;
    for (std::size_t k = 0; k < full_model.explained_ratio.size(); ++k) {
        acc += full_model.explained_ratio[k];
        if (acc >= fraction - 1e-12) return k + 1;
    }
    return full_model.explained_ratio.size();
}

Matrix pca_transform(const PcaModel& model, const Matrix& x) {
    if (x.cols() != model.mean.size()) throw ValidationError("pca_transform: dimension mismatch");
    const auto k = model.components.rows();
    Matrix scores(x.rows(), k);
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < x.cols(); ++j) s += (x(r, j) - model.mean[j]) * model.components(c, j);
            scores(r, c) = s;
        }
    return scores;
}

Matrix pca_inverse_transform(const PcaModel& model, const Matrix& scores) {
    const auto k = model.components.rows();
    if (scores.cols() != k) throw ValidationError("pca_inverse_transform: dimension mismatch");
    Matrix x(scores.rows(), model.mean.size());
    for (std::size_t r = 0; r < scores.rows(); ++r)
        for (std::size_t j = 0; j < model.mean.size(); ++j) {
            double v = model.mean[j];
            for (std::size_t c = 0; c < k; ++c) v += scores(r, c) * model.components(c, j);
            x(r, j) = v;
        }
    return x;
}

Linkage parse_linkage(const std::string& text) {
    if (text == "single") return Linkage::Single;
    if (text == "complete") return Linkage::Complete;
    if (text == "average") return Linkage::Average;
    throw ValidationError("linkage must be single, complete or average; got '" + text + "'");
}

Dendrogram hierarchical_cluster(const Matrix& x, Linkage linkage) {
    const auto n = x.rows();
    if (n < 2) throw ValidationError("hierarchical_cluster needs at least 2 points");

    // active clusters keyed by id; distance matrix over ids
    const auto total = 2 * n - 1;
    std::vector<std::vector<double>> dist(total, std::vector<double>(total, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                const double d = x(i, c) - x(j, c);
                s += d * d;
            }
            dist[i][j] = dist[j][i] = std::sqrt(s);
        }
    std::vector<std::size_t> size(total, 1);
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), 0);

    Dendrogram out;
    out.leaf_count = n;
    for (std::size_t step = 0; step + 1 < n; ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t ba = 0, bb = 0;
        // active is kept sorted, so scanning (a, b) lexicographically makes
        // the strict comparison pick the smallest pair on ties
        for (std::size_t i = 0; i < active.size(); ++i)
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                const double d = dist[active[i]][active[j]];
                if (d < best) {
                    best = d;
                    ba = active[i];
                    bb = active[j];
                }
            }

        const auto merged = n + step;
        size[merged] = size[ba] + size[bb];
        for (auto other : active) {
            if (other == ba || other == bb) continue;
            const double da = dist[ba][other];
            const double db = dist[bb][other];
            double d = 0.0;
            switch (linkage) {
                case Linkage::Single: d = std::min(da, db); break;
                case Linkage::Complete: d = std::max(da, db); break;
                case Linkage::Average:
                    d = (static_cast<double>(size[ba]) * da + static_cast<double>(size[bb]) * db) /
                        static_cast<double>(size[merged]);
                    break;
            }
            dist[merged][other] = dist[other][merged] = d;
        }
        out.merges.push_back({ba, bb, best});
        std::erase_if(active, [&](std::size_t id) { return id == ba || id == bb; });
        active.push_back(merged);
    }
    return out;
}

std::vector<int> cut_dendrogram(const Dendrogram& dendrogram, std::size_t k) {
    const auto n = dendrogram.leaf_count;
    if (k < 1 || k > n) throw ValidationError("cut_dendrogram: k must lie in [1, leaf count]");
    // union-find over the first n - k merges
    std::vector<std::size_t> parent(2 * n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (std::size_t m = 0; m + k < n; ++m) {
        const auto& merge = dendrogram.merges[m];
        const auto id = n + m;
        parent[find(merge.a)] = id;
        parent[find(merge.b)] = id;
    }
    std::map<std::size_t, int> label_of_root;
    std::vector<int> labels(n);
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        const auto root = find(leaf);
        const auto [it, inserted] = label_of_root.emplace(root, static_cast<int>(label_of_root.size()));
        labels[leaf] = it->second;
    }
    return labels;
}

std::string dendrogram_csv(const Dendrogram& dendrogram) {
    std::string out = "step,cluster_a,cluster_b,distance\n";
    char buf[96];
    for (std::size_t s = 0; s < dendrogram.merges.size(); ++s) {
        const auto& m = dendrogram.merges[s];
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g\n", s + 1, m.a, m.b, m.distance);
        out += buf;
    }
    return out;
}

}  // namespace gridguard
