#include "gridguard/control_curves.hpp"

#include "gridguard/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>

namespace gridguard {

std::string_view to_string(DeviceKind kind) {
    switch (kind) {
        case DeviceKind::PV: return "PV";
        case DeviceKind::EV: return "EV";
        case DeviceKind::BESS: return "BESS";
        case DeviceKind::HP: return "HP";
    }
    return "?";
}

DeviceKind parse_device_kind(std::string_view text) {
    if (text == "PV") return DeviceKind::PV;
    if (text == "EV") return DeviceKind::EV;
    if (text == "BESS") return DeviceKind::BESS;
    if (text == "HP") return DeviceKind::HP;
    throw ValidationError("unknown device kind '" + std::string(text) + "'");
}

double consumption_sign(DeviceKind kind) {
    return kind == DeviceKind::PV ? -1.0 : 1.0;
}

bool has_droop(DeviceKind kind) {
    return kind == DeviceKind::EV || kind == DeviceKind::PV;
}

PiecewiseLinearCurve::PiecewiseLinearCurve(std::vector<Breakpoint> breakpoints)
    : points_(std::move(breakpoints)) {
    if (points_.empty()) throw ValidationError("curve needs at least one breakpoint");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& bp = points_[i];
        if (!std::isfinite(bp.u) || !std::isfinite(bp.p_factor))
            throw ValidationError("curve breakpoint is not finite");
        if (bp.p_factor < 0.0 || bp.p_factor > 1.0)
            throw ValidationError("curve p_factor outside [0, 1]");
        if (i > 0 && !(bp.u > points_[i - 1].u))
            throw ValidationError("curve u values must be strictly increasing");
    }
}

PiecewiseLinearCurve PiecewiseLinearCurve::constant(double p_factor) {
    return PiecewiseLinearCurve({{1.0, p_factor}});
}

double PiecewiseLinearCurve::eval(double u) const {
    if (u <= points_.front().u) return points_.front().p_factor;
    if (u >= points_.back().u) return points_.back().p_factor;
    const auto hi = std::upper_bound(points_.begin(), points_.end(), u,
                                     [](double v, const Breakpoint& bp) { return v < bp.u; });
    const auto lo = hi - 1;
    const double t = (u - lo->u) / (hi->u - lo->u);
    return lo->p_factor + t * (hi->p_factor - lo->p_factor);
}

std::string_view to_string(Variant variant) {
    switch (variant) {
        case Variant::Correct: return "correct";
        case Variant::Flat: return "flat";
        case Variant::Inverted: return "inverted";
    }
    return "?";
}

Variant parse_variant(std::string_view text) {
    if (text == "correct") return Variant::Correct;
    if (text == "flat") return Variant::Flat;
    if (text == "inverted") return Variant::Inverted;
    throw ValidationError("unknown curve variant '" + std::string(text) + "'");
}

PiecewiseLinearCurve default_curve(DeviceKind kind) {
    switch (kind) {
        case DeviceKind::EV: return PiecewiseLinearCurve({{0.90, 0.1}, {0.95, 1.0}});
        case DeviceKind::PV: return PiecewiseLinearCurve({{1.05, 1.0}, {1.10, 0.1}});
        default:
            throw ValidationError("device kind " + std::string(to_string(kind)) +
                                  " has no droop curve");
    }
}

double eval_curve(const PiecewiseLinearCurve& curve, double u) { return curve.eval(u); }

PiecewiseLinearCurve invert(const PiecewiseLinearCurve& curve) {
    auto points = curve.breakpoints();
    const std::size_t n = points.size();
    for (std::size_t i = 0; i < n / 2; ++i)
        std::swap(points[i].p_factor, points[n - 1 - i].p_factor);
    return PiecewiseLinearCurve(std::move(points));
}

CurveVariant make_malfunction(DeviceKind kind, int choice) {
    switch (choice) {
        case 1: return resolve_variant(kind, Variant::Flat);
        case 2: return resolve_variant(kind, Variant::Inverted);
        default:
            throw ValidationError("malfunction choice must be 1 (flat) or 2 (inverted), got " +
                                  std::to_string(choice));
    }
}

CurveVariant resolve_variant(DeviceKind kind, Variant variant) {
    if (!has_droop(kind) || variant == Variant::Flat)
        return {variant, PiecewiseLinearCurve::constant(1.0)};
    if (variant == Variant::Inverted) return {variant, invert(default_curve(kind))};
    return {variant, default_curve(kind)};
}

void to_json(nlohmann::json& j, const PiecewiseLinearCurve& curve) {
    auto points = nlohmann::json::array();
    for (const auto& bp : curve.breakpoints()) points.push_back({bp.u, bp.p_factor});
    j = nlohmann::json{{"breakpoints", std::move(points)}};
}

PiecewiseLinearCurve curve_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("breakpoints") || j.size() != 1)
        throw ValidationError("curve must be an object with exactly the field 'breakpoints'");
    std::vector<Breakpoint> points;
    for (const auto& entry : j.at("breakpoints")) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number())
            throw ValidationError("curve breakpoint must be [u, p_factor]");
        points.push_back({entry[0].get<double>(), entry[1].get<double>()});
    }
    return PiecewiseLinearCurve(std::move(points));
}

}  // namespace gridguard
