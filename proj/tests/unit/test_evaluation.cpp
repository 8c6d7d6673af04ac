#include "doctest.h"

#include "gridguard/error.hpp"
#include "gridguard/evaluation.hpp"
#include "gridguard/rng.hpp"

#include <algorithm>
#include <set>

using namespace gridguard;
using doctest::Approx;

namespace {

ConfusionMatrix matrix(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    ConfusionMatrix m;
    m.counts = {{{a, b}, {c, d}}};
    return m;
}

std::vector<int> balanced(std::size_t n) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
    return y;
}

}  // namespace

TEST_CASE("confusion counts") {
    const std::vector<int> t{0, 0, 0, 1, 1, 1};
    CHECK(confusion(t, std::vector<int>{0, 0, 1, 0, 1, 1}) == matrix(2, 1, 1, 2));
    CHECK(confusion(t, t) == matrix(3, 0, 0, 3));
    CHECK(confusion(t, std::vector<int>{1, 1, 1, 0, 0, 0}) == matrix(0, 3, 3, 0));
    CHECK_THROWS_AS(confusion(t, std::vector<int>{0, 1}), ValidationError);
    CHECK_THROWS_AS(confusion(std::vector<int>{2}, std::vector<int>{0}), ValidationError);
}

TEST_CASE("scores") {
    SUBCASE("two thirds everywhere") {
        const auto s = scores(matrix(2, 1, 1, 2));
        CHECK(std::abs(s.accuracy - 2.0 / 3.0) < 1e-12);
        CHECK(std::abs(s.precision_macro - 2.0 / 3.0) < 1e-12);
        CHECK(std::abs(s.recall_macro - 2.0 / 3.0) < 1e-12);
        CHECK(std::abs(s.f1_macro - 2.0 / 3.0) < 1e-12);
    }
    SUBCASE("class never predicted") {
        const auto s = scores(matrix(3, 0, 2, 0));
        CHECK(s.precision[1] == 0.0);
        CHECK(s.f1[1] == 0.0);
        CHECK(s.precision_macro == Approx(0.3));
    }
    SUBCASE("empty") { CHECK_THROWS_AS(scores(ConfusionMatrix{}), ValidationError); }
}

TEST_CASE("score properties over random matrices") {
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
        const auto m = matrix(rng.below(20), rng.below(20), rng.below(20), rng.below(20));
        if (m.total() == 0) continue;
        const auto s = scores(m);
        for (double v : {s.accuracy, s.precision_macro, s.recall_macro, s.f1_macro}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(s.f1_macro <= std::max(s.f1[0], s.f1[1]) + 1e-15);
        const auto diag = scores(matrix(1 + rng.below(50), 0, 0, 1 + rng.below(50)));
        CHECK(diag.accuracy == 1.0);
        CHECK(diag.f1_macro == 1.0);
        CHECK(diag.precision_macro == 1.0);
        CHECK(diag.recall_macro == 1.0);
    }
}

TEST_CASE("score serialization") {
    auto s = scores(matrix(2, 1, 1, 2));
    s.meta = {"d", "logistic", {{"lr", "0.5"}}};
    nlohmann::json j = s;
    CHECK(j["accuracy"].get<double>() == Approx(2.0 / 3.0));
    CHECK(j["confusion"] == nlohmann::json::parse("[[2,1],[1,2]]"));
    const auto row = score_csv_row("0.1", s);
    CHECK(row.rfind("0.1,", 0) == 0);
    CHECK(std::count(row.begin(), row.end(), ',') == 4);
}

TEST_CASE("train test split") {
    const auto y = balanced(100);
    const auto s = train_test_split(y, 0.3, 4);
    CHECK(s.train.size() == 70);
    CHECK(s.test.size() == 30);
    CHECK(std::count_if(s.test.begin(), s.test.end(), [&](auto i) { return y[i] == 1; }) == 15);
    const auto again = train_test_split(y, 0.3, 4);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 100);

    const std::vector<int> skewed{0, 0, 0, 0, 0, 0, 0, 0, 1, 1};
    const auto k = train_test_split(skewed, 0.5, 1);
    CHECK(std::count_if(k.test.begin(), k.test.end(), [&](auto i) { return skewed[i] == 1; }) == 1);
    CHECK(k.test.size() == 5);

    CHECK_THROWS_AS(train_test_split(std::vector<int>{0, 0, 1}, 0.3, 1), ValidationError);
    CHECK_THROWS_AS(train_test_split(y, 0.0, 1), ValidationError);
    CHECK_THROWS_AS(train_test_split(y, 1.0, 1), ValidationError);
}

TEST_CASE("kfold partitions") {
    SUBCASE("sizes") {
        for (std::size_t n : {100u, 101u}) {
            const auto folds = kfold(balanced(n), 5, 2);
            REQUIRE(folds.size() == 5);
            std::vector<std::size_t> sizes;
            for (const auto& f : folds) sizes.push_back(f.test.size());
            std::sort(sizes.rbegin(), sizes.rend());
            if (n == 100) CHECK(sizes == std::vector<std::size_t>{20, 20, 20, 20, 20});
            else CHECK(sizes == std::vector<std::size_t>{21, 20, 20, 20, 20});
        }
    }
    SUBCASE("exact partition") {
        Rng rng(3);
        for (int trial = 0; trial < 30; ++trial) {
            const std::size_t n = 20 + rng.below(80);
            const int k = 2 + static_cast<int>(rng.below(5));
            const auto y = balanced(n);
            const auto folds = kfold(y, k, trial);
            std::vector<int> seen(n, 0);
            for (const auto& f : folds) {
                for (auto i : f.test) ++seen[i];
                CHECK(f.train.size() + f.test.size() == n);
            }
            CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        }
    }
    SUBCASE("k = 1 is a single split") {
        const auto folds = kfold(balanced(100), 1, 2, 0.3);
        REQUIRE(folds.size() == 1);
        CHECK(folds[0].test.size() == 30);
    }
    SUBCASE("too many folds") { CHECK_THROWS_AS(kfold(std::vector<int>{0, 0, 0, 1, 1}, 3, 1), ValidationError); }
}

TEST_CASE("learning rate schedule") {
    CHECK(warmup_epochs(20, 0.10) == 2);
    CHECK(lr_schedule(1, 20, 1e-6, 0.10) == Approx(5e-7).epsilon(1e-12));
    CHECK(lr_schedule(2, 20, 1e-6, 0.10) == Approx(1e-6).epsilon(1e-12));
    for (int e = 3; e <= 20; ++e) CHECK(lr_schedule(e, 20, 1e-6, 0.10) == 1e-6);
    for (int e = 1; e <= 20; ++e) CHECK(lr_schedule(e, 20, 0.3, 0.0) == 0.3);
    CHECK(warmup_epochs(7, 0.2) == 2);
}

TEST_CASE("grid search") {
    const std::vector<double> rates{0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1};
    int calls = 0;
    const auto result = grid_search({"calibration_rate", rates}, [&](double v) {
        ++calls;
        return scores(v < 0.5 ? matrix(2, 1, 1, 2) : matrix(3, 0, 0, 3));
    });
    CHECK(calls == 12);
    CHECK(result.rows.size() == 12);
    REQUIRE(result.best_value().has_value());
    CHECK(*result.best_value() == 0.5);

    const auto single = grid_search({"x", {7.0}}, [](double) { return scores(matrix(1, 1, 1, 1)); });
    CHECK(*single.best_value() == 7.0);

    const auto failing = grid_search({"x", {1.0, 2.0, 3.0}}, [](double v) {
        if (v == 2.0) throw RuntimeFailure("boom");
        return scores(matrix(1, 1, 1, 1));
    });
    CHECK(failing.rows[1].error.find("boom") != std::string::npos);
    CHECK_FALSE(failing.rows[1].report.has_value());
    CHECK(*failing.best_value() == 1.0);

    CHECK_THROWS_AS(grid_search({"x", {}}, [](double) { return scores(matrix(1, 0, 0, 1)); }), ValidationError);
}
