#include "doctest.h"

#include "fixtures.hpp"
#include "gridguard/error.hpp"
#include "gridguard/profiles.hpp"

#include <cmath>

using namespace gridguard;
using doctest::Approx;

TEST_CASE("household shape closed form") {
    // 0.2 + 0.3 exp(-((h-7.5)/1.5)^2) + 0.5 exp(-((h-19)/2)^2)
    auto oracle = [](double h) {
        return 0.2 + 0.3 * std::exp(-std::pow((h - 7.5) / 1.5, 2)) + 0.5 * std::exp(-std::pow((h - 19.0) / 2.0, 2));
    };
    CHECK(household_shape(19.0) == Approx(0.700).epsilon(1e-3));
    for (double h = 0; h < 24; h += 0.25) CHECK(household_shape(h) == Approx(oracle(h)).epsilon(1e-12));
    const auto p = synth_household(1, 1, 15, 0.0);
    CHECK(p.values[19 * 4] == Approx(oracle(19.0)));
}

TEST_CASE("pv shape") {
    CHECK(pv_shape(12.0) == Approx(1.0));
    CHECK(pv_shape(0.0) == 0.0);
    CHECK(pv_shape(20.0) == 0.0);
    CHECK(pv_shape(9.0) == Approx(std::pow(std::sin(M_PI / 4), 1.2)).epsilon(1e-12));
    CHECK(pv_shape(9.0) == Approx(0.660).epsilon(1e-3));
}

TEST_CASE("lengths follow days and step") {
    CHECK(profile_length(1, 15) == 96);
    CHECK(profile_length(365, 15) == 35040);
    CHECK(profile_length(2, 1) == 2880);
    CHECK_THROWS_AS(check_step_minutes(7), ValidationError);
    for (int step : {1, 5, 15, 60})
        for (int days : {1, 3}) {
            const auto n = static_cast<std::size_t>(days * 1440 / step);
            CHECK(synth_household(1, days, step, 0.05).size() == n);
            CHECK(synth_pv(1, days, step).size() == n);
            CHECK(synth_ev(1, days, step).size() == n);
        }
}

TEST_CASE("synthesized values are finite, non-negative and reproducible") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto h = synth_household(seed, 7, 15, 0.2);
        const auto pv = synth_pv(seed, 7, 15);
        const auto ev = synth_ev(seed, 7, 15);
        for (const auto* p : {&h, &pv, &ev})
            for (double v : p->values) {
                CHECK(std::isfinite(v));
                CHECK(v >= 0.0);
            }
        CHECK(h == synth_household(seed, 7, 15, 0.2));
        CHECK(pv == synth_pv(seed, 7, 15));
        CHECK(ev == synth_ev(seed, 7, 15));
    }
    CHECK_FALSE(synth_household(1, 2, 15, 0.1) == synth_household(2, 2, 15, 0.1));
}

TEST_CASE("pv daily clearness scales the clear-sky bell") {
    const auto p = synth_pv(4, 10, 60);
    for (int d = 0; d < 10; ++d) {
        const double noon = p.values[static_cast<std::size_t>(d * 24 + 12)];
        CHECK(noon >= 0.3);
        CHECK(noon <= 1.0);
        CHECK(p.values[static_cast<std::size_t>(d * 24 + 3)] == 0.0);
    }
}

TEST_CASE("ev sessions") {
    const auto one = ev_profile_from_sessions({{0, 18 * 60, 180}}, 1, 15);
    std::size_t on = 0;
    for (double v : one.values) on += v == 1.0;
    CHECK(on == 12);
    CHECK(one.values[18 * 4 - 1] == 0.0);
    CHECK(one.values[18 * 4] == 1.0);
    CHECK(one.values[21 * 4 - 1] == 1.0);
    CHECK(one.values[21 * 4] == 0.0);
    CHECK(one.values[0] == 0.0);

    const auto sessions = draw_ev_sessions(5, 30, 15);
    CHECK(sessions.size() == 30);
    for (const auto& s : sessions) {
        CHECK(s.arrival_minute >= 17 * 60);
        CHECK(s.arrival_minute <= 21 * 60);
        CHECK(s.duration_minutes >= 120);
        CHECK(s.duration_minutes <= 240);
        CHECK(s.arrival_minute % 15 == 0);
        CHECK(s.duration_minutes % 15 == 0);
    }
    const auto again = draw_ev_sessions(5, 30, 15);
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        CHECK(sessions[i].arrival_minute == again[i].arrival_minute);
        CHECK(sessions[i].duration_minutes == again[i].duration_minutes);
    }
    // a session running past midnight of the last day is truncated
    const auto late = ev_profile_from_sessions({{0, 23 * 60, 240}}, 1, 60);
    CHECK(late.size() == 24);
    CHECK(late.values[23] == 1.0);
}

TEST_CASE("profile csv") {
    const auto dir = fixture::temp_dir("profiles");
    SUBCASE("round trip and header") {
        const auto p = synth_household(3, 1, 15, 0.05);
        save_profile_csv(p, dir + "/p.csv");
        const auto q = load_profile_csv(dir + "/p.csv");
        CHECK(q.step_minutes == 15);
        CHECK(q.size() == 96);
        CHECK(q.values == p.values);
    }
    SUBCASE("timestamp column is ignored") {
        fixture::write_file(dir + "/t.csv", "# step_minutes=60\n2024-01-01T00:00,0.5\n2024-01-01T01:00,0.25\n");
        const auto q = load_profile_csv(dir + "/t.csv");
        CHECK(q.values == std::vector<double>{0.5, 0.25});
        CHECK(q.step_minutes == 60);
    }
    SUBCASE("NaN names the row") {
        fixture::write_file(dir + "/n.csv", "# step_minutes=15\n0.1\n0.2\nNaN\n");
        try {
            load_profile_csv(dir + "/n.csv");
            FAIL("expected an error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("row 4") != std::string::npos);
        }
    }
    SUBCASE("empty file") {
        fixture::write_file(dir + "/e.csv", "");
        CHECK_THROWS_AS(load_profile_csv(dir + "/e.csv"), ValidationError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_profile_csv(dir + "/none.csv"), ValidationError); }
}
