#pragma once

#include "gridguard/control_curves.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridguard {

enum class BusKind { Slack, PQ };

struct Bus {
    std::string id;
    BusKind kind = BusKind::PQ;
    double base_kv = 0.4;  ///< informational; all computation is per-unit

    bool operator==(const Bus&) const = default;
};

struct Line {
    std::string from;
    std::string to;
    double r_pu = 0.0;
    double x_pu = 0.0;

    bool operator==(const Line&) const = default;
};

struct Device {
    std::string id;
    std::string bus;
    DeviceKind kind = DeviceKind::EV;
    double rated_pu = 0.0;  ///< positive magnitude
    CurveVariant curve;

    bool operator==(const Device&) const = default;
};

/// Radial per-unit network. Treat as immutable once built; every operation
/// returns a new value.
struct GridModel {
    std::string name;
    double base_mva = 1.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Device> devices;

    bool operator==(const GridModel&) const = default;

    const Bus* find_bus(std::string_view id) const;
    const Device* find_device(std::string_view id) const;
    /// Index of the (first) slack bus, if any.
    std::optional<std::size_t> slack_index() const;
    /// Ids of all pq buses in document order.
    std::vector<std::string> pq_bus_ids() const;
};

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

/// Structural checks: unique ids, exactly one slack, line endpoints exist,
/// no self loops, non-negative impedances, connected, lines = buses - 1,
/// devices reference existing buses with positive rating. Never throws.
ValidationReport validate_radial(const GridModel& grid);

/// Parses a grid-description document (JSON). Throws ValidationError on
/// parse failures, unknown fields, or any validate_radial violation.
GridModel load_grid(std::string_view document);
GridModel load_grid_file(const std::string& path);

/// Canonical document form; load_grid(export_grid(g)) == g.
std::string export_grid(const GridModel& grid);

/// Number of devices place_devices puts on `eligible` buses for `percent`:
/// nearest integer, ties upward.
std::size_t placement_count(double percent, std::size_t eligible);

/// Rated power used by place_devices when no explicit rating is supplied.
double default_rated_pu(DeviceKind kind);

/// Adds devices of each kind to a seeded random subset of pq buses. Buses
/// are drawn independently per kind; all placed devices start Correct.
/// Device ids are "<KIND>_<bus id>".
GridModel place_devices(const GridModel& grid, const std::map<DeviceKind, double>& percentages,
                        std::uint64_t seed,
                        const std::map<DeviceKind, double>& rated_pu = {});

struct FeederOptions {
    double r_min = 0.002;
    double r_max = 0.03;
    double x_min = 0.001;
    double x_max = 0.02;
};

/// Random radial feeder with bus "b0" as slack; each further bus attaches to
/// a uniformly drawn earlier bus. Always passes validate_radial.
GridModel random_radial_feeder(std::size_t bus_count, std::uint64_t seed,
                               const FeederOptions& options = {});

}  // namespace gridguard
