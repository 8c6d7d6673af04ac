#include "doctest.h"

#include "gridguard/control_curves.hpp"
#include "gridguard/error.hpp"

using namespace gridguard;
using doctest::Approx;

TEST_CASE("default curve evaluation") {
    const auto ev = default_curve(DeviceKind::EV);
    const auto pv = default_curve(DeviceKind::PV);
    CHECK(eval_curve(ev, 1.00) == 1.0);
    CHECK(eval_curve(ev, 0.925) == Approx(0.55).epsilon(1e-12));
    CHECK(eval_curve(ev, 0.80) == 0.1);
    CHECK(eval_curve(ev, 0.94) == Approx(0.1 + 0.04 / 0.05 * 0.9).epsilon(1e-12));
    CHECK(eval_curve(pv, 1.10) == Approx(0.1));
    CHECK(eval_curve(pv, 1.00) == 1.0);
    CHECK_THROWS_AS(default_curve(DeviceKind::BESS), ValidationError);
}

TEST_CASE("curve construction is validated") {
    CHECK_THROWS_AS(PiecewiseLinearCurve({}), ValidationError);
    CHECK_THROWS_AS(PiecewiseLinearCurve({{1.0, 0.5}, {1.0, 0.6}}), ValidationError);
    CHECK_THROWS_AS(PiecewiseLinearCurve({{1.0, 0.5}, {0.9, 0.6}}), ValidationError);
    CHECK_THROWS_AS(PiecewiseLinearCurve({{1.0, 1.5}}), ValidationError);
    CHECK_THROWS_AS(PiecewiseLinearCurve({{1.0, -0.1}}), ValidationError);
}

TEST_CASE("flat curve is constant one") {
    const auto flat = PiecewiseLinearCurve::constant(1.0);
    for (double u = 0.5; u < 1.5; u += 0.01) CHECK(eval_curve(flat, u) == 1.0);
    CHECK(invert(flat) == flat);
}

TEST_CASE("malfunction choices") {
    CHECK(make_malfunction(DeviceKind::EV, 1).variant == Variant::Flat);
    CHECK(make_malfunction(DeviceKind::EV, 1).curve == PiecewiseLinearCurve::constant(1.0));
    const auto inv = make_malfunction(DeviceKind::EV, 2);
    CHECK(inv.variant == Variant::Inverted);
    CHECK(inv.curve.breakpoints() == std::vector<Breakpoint>{{0.90, 1.0}, {0.95, 0.1}});
    CHECK_THROWS_AS(make_malfunction(DeviceKind::EV, 3), ValidationError);
    CHECK_THROWS_AS(make_malfunction(DeviceKind::EV, 0), ValidationError);
}

TEST_CASE("invert reverses the factor sequence and is an involution") {
    const PiecewiseLinearCurve c({{0.90, 0.1}, {0.95, 1.0}});
    CHECK(invert(c).breakpoints() == std::vector<Breakpoint>{{0.90, 1.0}, {0.95, 0.1}});
    const PiecewiseLinearCurve odd({{0.8, 0.0}, {0.9, 0.3}, {1.0, 0.7}, {1.1, 1.0}});
    CHECK(invert(invert(odd)) == odd);
    CHECK(invert(invert(default_curve(DeviceKind::PV))) == default_curve(DeviceKind::PV));
}

TEST_CASE("non-droop kinds resolve to flat") {
    for (auto kind : {DeviceKind::BESS, DeviceKind::HP})
        for (auto v : {Variant::Correct, Variant::Flat, Variant::Inverted})
            CHECK(resolve_variant(kind, v).curve == PiecewiseLinearCurve::constant(1.0));
    CHECK(resolve_variant(DeviceKind::EV, Variant::Inverted).curve == invert(default_curve(DeviceKind::EV)));
}

TEST_CASE("evaluation is continuous and monotone between breakpoints") {
    const PiecewiseLinearCurve c({{0.8, 0.0}, {0.9, 0.6}, {1.0, 0.2}, {1.1, 1.0}});
    const auto& bp = c.breakpoints();
    for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
        const double dir = bp[k + 1].p_factor - bp[k].p_factor;
        double prev = eval_curve(c, bp[k].u);
        for (int i = 1; i <= 200; ++i) {
            const double u = bp[k].u + (bp[k + 1].u - bp[k].u) * i / 200.0;
            const double v = eval_curve(c, u);
            CHECK((v - prev) * dir >= -1e-15);
            CHECK(std::abs(v - prev) <= std::abs(dir) / 200.0 + 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("inverted EV consumes more below the ramp midpoint") {
    // The reversed ramp crosses the correct one at its midpoint (0.925 pu);
    // between the midpoint and 0.95 pu the inverted device draws less.
    const auto correct = default_curve(DeviceKind::EV);
    const auto inverted = invert(correct);
    for (int i = 0; i < 1000; ++i) {
        const double u = 0.85 + 0.15 * i / 999.0;
        const double pc = eval_curve(correct, u), pi = eval_curve(inverted, u);
        if (u < 0.925 - 1e-12) CHECK(pi > pc);
        if (u > 0.925 + 1e-12 && pc < 1.0) CHECK(pi < pc);
    }
    CHECK(eval_curve(correct, 0.94) == Approx(0.82));
    CHECK(eval_curve(inverted, 0.94) == Approx(0.28));
}

TEST_CASE("endpoint symmetry") {
    for (auto kind : {DeviceKind::EV, DeviceKind::PV}) {
        const auto c = default_curve(kind);
        const auto inv = invert(c);
        const double lo = c.breakpoints().front().p_factor, hi = c.breakpoints().back().p_factor;
        for (const auto& b : c.breakpoints())
            CHECK(eval_curve(inv, b.u) + eval_curve(c, b.u) == Approx(lo + hi));
    }
}

TEST_CASE("curve json round trip") {
    const auto c = default_curve(DeviceKind::PV);
    nlohmann::json j = c;
    CHECK(curve_from_json(j) == c);
    CHECK_THROWS_AS(curve_from_json(nlohmann::json{{"breakpoints", {{1.0, 2.0}}}}), ValidationError);
}

TEST_CASE("kind and variant names") {
    for (auto k : {DeviceKind::PV, DeviceKind::EV, DeviceKind::BESS, DeviceKind::HP})
        CHECK(parse_device_kind(to_string(k)) == k);
    for (auto v : {Variant::Correct, Variant::Flat, Variant::Inverted}) CHECK(parse_variant(to_string(v)) == v);
    CHECK_THROWS_AS(parse_device_kind("WIND"), ValidationError);
    CHECK(consumption_sign(DeviceKind::PV) == -1.0);
    CHECK(consumption_sign(DeviceKind::EV) == 1.0);
}
