#pragma once

#include "gridguard/grid_model.hpp"
#include "gridguard/profiles.hpp"

#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridguard {

using Complex = std::complex<double>;

/// Complex power drawn at a bus, consumption positive.
struct Injection {
    std::string bus;
    Complex s;
};

struct SolverSettings {
    double tolerance = 1e-8;       ///< max |dV| between sweeps, pu
    int max_iterations = 100;      ///< sweeps per snapshot (and outer droop passes)
    double droop_damping = 0.5;    ///< lambda in (0, 1]
    double droop_tolerance = 1e-7; ///< max device power change, pu
    Complex slack_voltage{1.0, 0.0};

    void validate() const;
    bool operator==(const SolverSettings&) const = default;
};

struct PowerFlowResult {
    std::vector<Complex> voltages;  ///< grid bus order
    int iterations = 0;
    bool converged = false;
    std::string diagnostic;
};

/// Tree view of a radial grid, ordered root-first. Built once per grid and
/// reused across snapshots.
class RadialNetwork {
public:
    explicit RadialNetwork(const GridModel& grid);

    std::size_t bus_count() const { return parent_.size(); }
    std::size_t slack() const { return slack_; }
    std::size_t index_of(const std::string& bus_id) const;
    const std::vector<std::string>& bus_ids() const { return ids_; }

    /// Backward-forward sweep. `loads` is indexed by grid bus order;
    /// `initial` (optional) warm-starts the voltages.
    PowerFlowResult solve(std::span<const Complex> loads, const SolverSettings& settings,
                          std::span<const Complex> initial = {}) const;

    /// Power entering the feeder through the slack bus (consumption positive).
    Complex slack_power(std::span<const Complex> voltages) const;

    /// Largest |S_calc - S_load| over pq buses, S_calc derived from branch
    /// currents implied by the voltages.
    double max_power_mismatch(std::span<const Complex> loads,
                              std::span<const Complex> voltages) const;

private:
    std::vector<std::string> ids_;
    std::map<std::string, std::size_t> index_;
    std::size_t slack_ = 0;
    std::vector<std::size_t> order_;   ///< BFS order from the slack
    std::vector<std::size_t> parent_;  ///< parent bus index; slack points to itself
    std::vector<Complex> z_;           ///< impedance of the line to the parent
};

PowerFlowResult solve_snapshot(const GridModel& grid, std::span<const Injection> injections,
                               const SolverSettings& settings = {});

struct DroopResult {
    PowerFlowResult flow;
    std::vector<double> device_p;  ///< consumption-positive, per device in input order
    int outer_iterations = 0;
    bool converged = false;
};

/// Device state for one droop solve: power available before the curve is
/// applied (rated times availability, as a non-negative magnitude).
struct DroopDevice {
    std::size_t bus = 0;
    double available = 0.0;
    double sign = 1.0;
    const PiecewiseLinearCurve* curve = nullptr;
};

/// Damped outer fixed point between the device curves and the sweep.
DroopResult solve_droop(const RadialNetwork& network, std::span<const Complex> base_loads,
                        std::span<const DroopDevice> devices, const SolverSettings& settings,
                        std::span<const Complex> initial_voltages = {});

/// Convenience form: every device at full availability.
DroopResult solve_with_droop(const GridModel& grid, std::span<const Injection> base_injections,
                             std::span<const Device> devices, const SolverSettings& settings = {});

/// Household-type load: profile values scaled to pu, Q = q_ratio * P.
struct LoadProfile {
    Profile profile;
    double p_scale = 1.0;
    double q_ratio = 0.0;
};

struct ProfileAssignment {
    std::map<std::string, LoadProfile> bus_loads;  ///< by bus id
    std::map<std::string, Profile> device_availability;  ///< by device id
};

struct SubstationRecord {
    double v = 0.0;
    double p = 0.0;
    double q = 0.0;
    double i = 0.0;

    bool operator==(const SubstationRecord&) const = default;
};

struct TimeSeriesResult {
    int step_minutes = 15;
    long t_start_minutes = 0;
    std::vector<std::string> bus_ids;
    std::vector<std::vector<double>> bus_vm;  ///< [bus][step]
    std::vector<std::string> device_ids;
    std::vector<std::vector<double>> device_p;  ///< [device][step], consumption positive
    std::vector<std::vector<double>> device_q;
    std::vector<SubstationRecord> substation;

    std::size_t steps() const { return substation.size(); }
    std::size_t bus_index(const std::string& id) const;
    std::size_t device_index(const std::string& id) const;
    bool operator==(const TimeSeriesResult&) const = default;
};

struct Horizon {
    std::optional<long> t_start_minutes;  ///< absent: start of the profiles
    std::optional<long> t_end_minutes;    ///< absent: end of the shortest profile; exclusive
    int step_minutes = 15;

    bool operator==(const Horizon&) const = default;
};

/// One droop-resolved snapshot per step. Throws ValidationError for
/// profile/step mismatches or an empty horizon and RuntimeFailure naming the
/// step index when a snapshot does not converge.
TimeSeriesResult simulate_timeseries(const GridModel& grid, const ProfileAssignment& profiles,
                                     const Horizon& horizon, const SolverSettings& settings = {});

}  // namespace gridguard
