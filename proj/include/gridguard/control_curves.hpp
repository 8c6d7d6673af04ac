#pragma once

#include "json.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace gridguard {

enum class DeviceKind { PV, EV, BESS, HP };

std::string_view to_string(DeviceKind kind);
DeviceKind parse_device_kind(std::string_view text);

/// Sign applied to a device's active power in the consumption-positive
/// convention: consumers +1, PV -1.
double consumption_sign(DeviceKind kind);

/// True for kinds that carry a P(U) droop law (EV, PV).
bool has_droop(DeviceKind kind);

struct Breakpoint {
    double u = 0.0;         ///< per-unit voltage
    double p_factor = 0.0;  ///< fraction of available power, in [0, 1]

    bool operator==(const Breakpoint&) const = default;
};

/// Voltage-to-power-factor law. Linear between breakpoints, clamped to the
/// end values outside them.
class PiecewiseLinearCurve {
public:
    /// Throws ValidationError unless u is strictly increasing, every
    /// p_factor lies in [0, 1] and there is at least one breakpoint.
    explicit PiecewiseLinearCurve(std::vector<Breakpoint> breakpoints);

    static PiecewiseLinearCurve constant(double p_factor);

    const std::vector<Breakpoint>& breakpoints() const { return points_; }
    double eval(double u) const;

    bool operator==(const PiecewiseLinearCurve&) const = default;

private:
    std::vector<Breakpoint> points_;
};

enum class Variant { Correct, Flat, Inverted };

std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view text);

struct CurveVariant {
    Variant variant = Variant::Correct;
    PiecewiseLinearCurve curve = PiecewiseLinearCurve::constant(1.0);

    bool operator==(const CurveVariant&) const = default;
};

/// Factory curve for droop-capable kinds. EV limits consumption below
/// 0.95 pu; PV curtails generation above 1.05 pu. Throws for BESS/HP.
PiecewiseLinearCurve default_curve(DeviceKind kind);

double eval_curve(const PiecewiseLinearCurve& curve, double u);

/// Same u-grid, p_factor sequence reversed.
PiecewiseLinearCurve invert(const PiecewiseLinearCurve& curve);

/// Malfunction choice as used in experiment configs: 1 = flat, 2 = inverted.
CurveVariant make_malfunction(DeviceKind kind, int choice);

/// Resolves a variant tag to a concrete curve for the given kind. Kinds
/// without droop always resolve to the constant 1.0 curve.
CurveVariant resolve_variant(DeviceKind kind, Variant variant);

void to_json(nlohmann::json& j, const PiecewiseLinearCurve& curve);
PiecewiseLinearCurve curve_from_json(const nlohmann::json& j);

}  // namespace gridguard
