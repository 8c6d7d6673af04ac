#pragma once

#include "gridguard/dataset.hpp"
#include "gridguard/grid_model.hpp"
#include "gridguard/parallel.hpp"
#include "gridguard/powerflow.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridguard {

/// Everything scenario construction and simulation need from an experiment
/// config.
struct DatagenSettings {
    std::map<DeviceKind, double> percentages{{DeviceKind::PV, 0.0},
                                             {DeviceKind::EV, 25.0},
                                             {DeviceKind::BESS, 0.0},
                                             {DeviceKind::HP, 0.0}};
    std::map<DeviceKind, double> rated_pu;  ///< empty entries use default_rated_pu
    DeviceKind device_kind = DeviceKind::EV;
    int malfunction_choice = 2;
    int sim_days = 365;
    int step_minutes = 15;
    std::optional<long> t_start_minutes;
    std::optional<long> t_end_minutes;
    double household_rated_pu = 0.025;
    double household_noise_sigma = 0.05;
    double household_q_ratio = 0.33;
    std::uint64_t master_seed = 0;
    SolverSettings solver;
};

struct Scenario {
    std::string id;
    std::size_t grid_index = 0;
    std::string grid;
    std::uint64_t placement_seed = 0;
    std::string monitored_device;
    std::string monitored_bus;
    Variant variant = Variant::Correct;
    std::uint64_t profile_seed = 0;
    Horizon horizon;

    int label() const { return variant == Variant::Correct ? 0 : 1; }
    bool operator==(const Scenario&) const = default;
};

/// Per grid and per monitored device of the scrutinized kind: one Correct
/// scenario and one with the configured malfunction. Seeds derive from the
/// master seed and the grid name. Throws if a grid ends up without devices
/// of the scrutinized kind.
std::vector<Scenario> build_scenarios(const DatagenSettings& settings,
                                      const std::vector<GridModel>& grids);

/// Placed grid (monitored device switched to the scenario's variant) plus its
/// profiles, ready to simulate.
SimulationJob materialize(const Scenario& scenario, const GridModel& grid,
                          const DatagenSettings& settings);

enum class Channel { P, V };
Channel parse_channel(const std::string& text);

/// Non-overlapping windows of the chosen channel at the device's connection
/// point; the trailing partial window is dropped.
std::vector<Sample> extract_samples(const TimeSeriesResult& result, const Scenario& scenario,
                                    std::size_t sample_length, Channel channel);

/// Class-balanced seeded draw of exactly `number_of_samples` (must be even).
Dataset assemble_dataset(const std::vector<Sample>& samples, std::size_t number_of_samples,
                         std::uint64_t seed);

/// Mean/std per position over the given training rows.
ScalingStats fit_scaling(const Dataset& dataset, std::span<const std::size_t> train_indices);
/// z = (x - mean) / std; positions with std < 1e-12 become 0.
Dataset apply_scaling(const Dataset& dataset, const ScalingStats& stats);
/// fit_scaling on the training rows, applied to every sample; stats kept in
/// metadata.
Dataset scale(const Dataset& dataset, std::span<const std::size_t> train_indices);

struct RawRecord {
    std::string scenario_id;
    std::string grid;
    std::string device_id;
    std::string bus_id;
    std::size_t step = 0;
    double v_pu = 0.0;
    double p_pu = 0.0;
    double q_pu = 0.0;
    int label = 0;

    bool operator==(const RawRecord&) const = default;
};

inline constexpr const char* kRawHeader = "scenario_id,grid,device_id,bus_id,step,v_pu,p_pu,q_pu,label";
inline constexpr const char* kSubstationHeader = "scenario_id,step,v_pu,p_pu,q_pu,i_pu,label";

/// Monitored-device rows of one simulated scenario.
std::vector<RawRecord> raw_records(const TimeSeriesResult& result, const Scenario& scenario);

void save_raw(const std::vector<RawRecord>& records, const std::string& path);
std::vector<RawRecord> load_raw(const std::string& path);

struct SubstationRow {
    std::string scenario_id;
    std::size_t step = 0;
    SubstationRecord record;
    int label = 0;

    bool operator==(const SubstationRow&) const = default;
};

void save_substation(const std::vector<SubstationRow>& rows, const std::string& path);
std::vector<SubstationRow> load_substation(const std::string& path);

/// One window of substation channels {V, P, Q, I}.
struct SubstationWindow {
    std::array<std::vector<double>, 4> channels;
    int label = 0;
    std::string scenario;
    std::string grid;
    std::size_t window_start = 0;
};

struct SubstationDataset {
    std::size_t window_length = 0;
    std::vector<SubstationWindow> windows;
};

/// Windows of `window_length` consecutive rows per scenario, in row order.
/// `grid_of` maps scenario ids to grid names.
SubstationDataset substation_windows(const std::vector<SubstationRow>& rows,
                                     std::size_t window_length,
                                     const std::map<std::string, std::string>& grid_of);

/// Output of the device-level generation run.
struct GeneratedData {
    std::vector<Scenario> scenarios;
    std::vector<RawRecord> raw;
    std::vector<Sample> samples;
};

/// Builds, simulates (parallel when workers > 1) and windows every scenario.
/// Throws RuntimeFailure listing every failed scenario after all finished.
GeneratedData generate_device_data(const DatagenSettings& settings,
                                   const std::vector<GridModel>& grids, std::size_t sample_length,
                                   Channel channel, int workers);

struct GeneratedSubstation {
    std::vector<Scenario> scenarios;
    std::vector<SubstationRow> rows;
};

/// Substation series of every scenario, simulated at `settings.step_minutes`
/// (1 minute for transformer-level data).
GeneratedSubstation generate_substation_data(const DatagenSettings& settings,
                                             const std::vector<GridModel>& grids, int workers);

struct SimulatedScenarios {
    std::vector<Scenario> scenarios;
    std::vector<TimeSeriesResult> results;  ///< parallel to scenarios
};

/// Full simulation output of every scenario.
SimulatedScenarios simulate_scenarios(const DatagenSettings& settings,
                                      const std::vector<GridModel>& grids, int workers);

}  // namespace gridguard
