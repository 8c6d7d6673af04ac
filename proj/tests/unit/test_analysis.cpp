#include "doctest.h"

#include "gridguard/analysis.hpp"
#include "gridguard/error.hpp"
#include "gridguard/rng.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace gridguard;
using doctest::Approx;

namespace {

Matrix random_points(Rng& rng, std::size_t n, std::size_t d, double scale = 1.0) {
    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = scale * rng.normal();
    return x;
}

Matrix covariance(const Matrix& x) {
    const auto n = x.rows(), d = x.cols();
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j) / static_cast<double>(n);
    Matrix c(d, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                c(a, b) += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / static_cast<double>(n - 1);
    return c;
}

double reconstruction_error(const Matrix& x, std::size_t k) {
    const auto m = pca_fit(x, k);
    const auto back = pca_inverse_transform(m, pca_transform(m, x));
    double err = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) err += std::pow(back(i, j) - x(i, j), 2);
    return err;
}

bool same_merges(const Dendrogram& a, const Dendrogram& b) {
    if (a.merges.size() != b.merges.size()) return false;
    for (std::size_t s = 0; s < a.merges.size(); ++s) {
        if (a.merges[s].a != b.merges[s].a || a.merges[s].b != b.merges[s].b) return false;
        if (std::abs(a.merges[s].distance - b.merges[s].distance) > 1e-12) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("points on a diagonal have one component") {
    const auto x = Matrix::from_rows({{0, 0}, {1, 1}, {2, 2}, {-3, -3}});
    const auto m = pca_fit(x, 2);
    CHECK(m.components(0, 0) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(m.components(0, 1) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(m.explained_ratio[0] == Approx(1.0).epsilon(1e-12));
    CHECK(components_for_variance(m, 0.95) == 1);
}

TEST_CASE("isotropic data has equal eigenvalues") {
    const auto x = Matrix::from_rows({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
    const auto m = pca_fit(x, 2);
    CHECK(std::abs(m.eigenvalues[0] - m.eigenvalues[1]) < 1e-10);
}

TEST_CASE("eigenvalues agree with characteristic polynomial roots") {
    const auto fixed = Matrix::from_rows({{4, 1, 0.5}, {1, 3, 0.2}, {0.5, 0.2, 1}});
    const auto roots = oracle::eigenvalues_by_polynomial(fixed);
    const auto eig = jacobi_eigen(fixed);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(eig.values[k] - roots[k]) < 1e-10);

    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = 2 + rng.below(3);
        const auto x = random_points(rng, 15, d);
        const auto m = pca_fit(x, d);
        const auto expected = oracle::eigenvalues_by_polynomial(covariance(x));
        for (std::size_t k = 0; k < d; ++k) CHECK(std::abs(m.eigenvalues[k] - expected[k]) < 1e-8);
    }
}

TEST_CASE("pca invariants on random fixtures") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 2 + rng.below(5);
        const auto x = random_points(rng, 30, d, 1.0 + trial);
        const auto m = pca_fit(x, d);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += m.components(a, j) * m.components(b, j);
                CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
            }
        const auto c = covariance(x);
        double trace = 0.0, sum = 0.0, ratio = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            trace += c(j, j);
            sum += m.eigenvalues[j];
            ratio += m.explained_ratio[j];
            CHECK(m.eigenvalues[j] >= -1e-12);
            if (j > 0) CHECK(m.eigenvalues[j] <= m.eigenvalues[j - 1]);
        }
        CHECK(std::abs(trace - sum) < 1e-10 * std::max(1.0, trace));
        CHECK(ratio == Approx(1.0).epsilon(1e-12));
        CHECK(reconstruction_error(x, d) < 1e-10 * std::max(1.0, trace) * 30);

        double previous = INFINITY;
        for (std::size_t k = 1; k <= d; ++k) {
            const double e = reconstruction_error(x, k);
            CHECK(e <= previous + 1e-9);
            previous = e;
        }
    }
}

TEST_CASE("transforming the mean gives zero scores") {
    Rng rng(1);
    const auto x = random_points(rng, 10, 3);
    const auto m = pca_fit(x, 3);
    Matrix mean(1, 3);
    for (std::size_t j = 0; j < 3; ++j) mean(0, j) = m.mean[j];
    const auto s = pca_transform(m, mean);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(s(0, j)) < 1e-12);
}

TEST_CASE("pca preconditions") {
    const auto x = Matrix::from_rows({{1, 2}, {3, 4}});
    CHECK_THROWS_AS(pca_fit(x, 3), ValidationError);
    CHECK_THROWS_AS(pca_fit(Matrix::from_rows({{1, 2}}), 1), ValidationError);
    const auto m = pca_fit(x, 1);
    CHECK_THROWS_AS(pca_transform(m, Matrix(1, 3)), ValidationError);
}

TEST_CASE("clustering three points on a line") {
    const auto x = Matrix::from_rows({{0}, {1}, {10}});
    const auto d = hierarchical_cluster(x, Linkage::Single);
    REQUIRE(d.merges.size() == 2);
    CHECK(d.merges[0].a == 0);
    CHECK(d.merges[0].b == 1);
    CHECK(d.merges[0].distance == 1.0);
    CHECK(d.merges[1].a == 2);
    CHECK(d.merges[1].b == 3);
    CHECK(d.merges[1].distance == 9.0);

    CHECK(cut_dendrogram(d, 2) == std::vector<int>{0, 0, 1});
    CHECK(cut_dendrogram(d, 3) == std::vector<int>{0, 1, 2});
    CHECK(cut_dendrogram(d, 1) == std::vector<int>{0, 0, 0});
    CHECK_THROWS_AS(cut_dendrogram(d, 0), ValidationError);
    CHECK_THROWS_AS(cut_dendrogram(d, 4), ValidationError);
    CHECK(dendrogram_csv(d) == "step,cluster_a,cluster_b,distance\n1,0,1,1\n2,2,3,9\n");
}

TEST_CASE("identical points merge at zero") {
    const auto d = hierarchical_cluster(Matrix::from_rows({{2, 2}, {2, 2}, {5, 1}}));
    CHECK(d.merges[0].distance == 0.0);
    CHECK_THROWS_AS(hierarchical_cluster(Matrix::from_rows({{1, 1}})), ValidationError);
}

TEST_CASE("clustering matches brute-force agglomeration") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(5);
        Matrix x(n, 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                // a coarse lattice makes distance ties common
                x(i, j) = trial % 2 == 0 ? static_cast<double>(rng.below(4)) : rng.normal();
        for (const auto linkage : {Linkage::Single, Linkage::Complete, Linkage::Average}) {
            const auto fast = hierarchical_cluster(x, linkage);
            const auto slow = oracle::brute_force_cluster(x, linkage);
            CHECK(fast.merges.size() == n - 1);
            CHECK(same_merges(fast, slow));
            for (std::size_t s = 1; s < fast.merges.size(); ++s)
                CHECK(fast.merges[s].distance >= fast.merges[s - 1].distance - 1e-12);
        }
    }
}

TEST_CASE("linkage names") {
    CHECK(parse_linkage("single") == Linkage::Single);
    CHECK(parse_linkage("complete") == Linkage::Complete);
    CHECK(parse_linkage("average") == Linkage::Average);
    CHECK_THROWS_AS(parse_linkage("ward"), ValidationError);
}
