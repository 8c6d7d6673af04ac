#include "gridguard/datagen.hpp"

#include "gridguard/error.hpp"
#include "gridguard/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace gridguard {

std::vector<Scenario> build_scenarios(const DatagenSettings& settings,
                                      const std::vector<GridModel>& grids) {
    if (grids.empty()) throw ValidationError("at least one grid is required");
    const auto malfunction = make_malfunction(settings.device_kind, settings.malfunction_choice);
    for (const auto& [kind, pct] : settings.percentages) placement_count(pct, 1);

    std::vector<Scenario> scenarios;
    for (std::size_t g = 0; g < grids.size(); ++g) {
        const auto& grid = grids[g];
        const auto placement_seed = derive_seed(settings.master_seed, "placement:" + grid.name);
        const auto profile_seed = derive_seed(settings.master_seed, "profiles:" + grid.name);
        const auto placed = place_devices(grid, settings.percentages, placement_seed, settings.rated_pu);

        std::size_t monitored = 0;
        for (const auto& d : placed.devices) {
            if (d.kind != settings.device_kind) continue;
            ++monitored;
            for (const auto variant : {Variant::Correct, malfunction.variant}) {
                Scenario s;
                s.id = grid.name + "/" + d.id + "/" + std::string(to_string(variant));
                s.grid_index = g;
                s.grid = grid.name;
                s.placement_seed = placement_seed;
                s.monitored_device = d.id;
                s.monitored_bus = d.bus;
                s.variant = variant;
                s.profile_seed = profile_seed;
                s.horizon = {settings.t_start_minutes, settings.t_end_minutes, settings.step_minutes};
                scenarios.push_back(std::move(s));
            }
        }
        if (monitored == 0)
            throw ValidationError("grid '" + grid.name + "' has no " +
                                  std::string(to_string(settings.device_kind)) +
                                  " devices after placement");
    }
    return scenarios;
}

SimulationJob materialize(const Scenario& scenario, const GridModel& grid,
                          const DatagenSettings& settings) {
    SimulationJob job;
    job.grid = place_devices(grid, settings.percentages, scenario.placement_seed, settings.rated_pu);
    bool found = false;
    for (auto& d : job.grid.devices)
        if (d.id == scenario.monitored_device) {
            d.curve = resolve_variant(d.kind, scenario.variant);
            found = true;
        }
    if (!found)
        throw ValidationError("scenario " + scenario.id + ": monitored device '" +
                              scenario.monitored_device + "' is not in the placed grid");

    int days = settings.sim_days;
    if (scenario.horizon.t_end_minutes)
        days = std::max<int>(days, static_cast<int>((*scenario.horizon.t_end_minutes + 1439) / 1440));
    const int step = scenario.horizon.step_minutes;

    for (const auto& bus : job.grid.pq_bus_ids()) {
        const auto seed = derive_seed(scenario.profile_seed, "load:" + bus);
        job.profiles.bus_loads.emplace(
            bus, LoadProfile{synth_household(seed, days, step, settings.household_noise_sigma),
                             settings.household_rated_pu, settings.household_q_ratio});
    }
    for (const auto& d : job.grid.devices) {
        const auto seed = derive_seed(scenario.profile_seed, "device:" + d.id);
        Profile p;
        switch (d.kind) {
            case DeviceKind::EV: p = synth_ev(seed, days, step); break;
            case DeviceKind::PV: p = synth_pv(seed, days, step); break;
            default: p = constant_profile(1.0, days, step, "constant"); break;
        }
        job.profiles.device_availability.emplace(d.id, std::move(p));
    }
    job.horizon = scenario.horizon;
    job.settings = settings.solver;
    return job;
}

Channel parse_channel(const std::string& text) {
    if (text == "P") return Channel::P;
    if (text == "V") return Channel::V;
    throw ValidationError("sample channel must be 'P' or 'V', got '" + text + "'");
}


std::vector<Sample> extract_samples(const TimeSeriesResult& result, const Scenario& scenario,
                                    std::size_t sample_length, Channel channel) {
    if (sample_length == 0) throw ValidationError("sample_length must be positive");
    const auto steps = result.steps();
    if (steps < sample_length)
        throw ValidationError("series of length " + std::to_string(steps) +
                              " is shorter than one window of " + std::to_string(sample_length));

    const std::vector<double>* series = nullptr;
    const auto dev = result.device_index(scenario.monitored_device);
    if (channel == Channel::P) {
        series = &result.device_p[dev];
    } else {
        series = &result.bus_vm[result.bus_index(scenario.monitored_bus)];
    }

    std::vector<Sample> samples;
    for (std::size_t start = 0; start + sample_length <= steps; start += sample_length) {
        Sample s;
        s.values.assign(series->begin() + static_cast<std::ptrdiff_t>(start),
                        series->begin() + static_cast<std::ptrdiff_t>(start + sample_length));
        s.label = scenario.label();
        s.provenance = {scenario.id, scenario.grid, scenario.monitored_device, start};
        samples.push_back(std::move(s));
    }
    return samples;
}

Dataset assemble_dataset(const std::vector<Sample>& samples, std::size_t number_of_samples,
                         std::uint64_t seed) {
    if (number_of_samples % 2 != 0)
        throw ValidationError("number_of_samples must be even for a strict 50/50 class balance");
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int label = samples[i].label;
        if (label != 0 && label != 1) throw ValidationError("sample label outside {0, 1}");
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }
    const auto per_class = number_of_samples / 2;
    if (by_class[0].size() < per_class || by_class[1].size() < per_class)
        throw ValidationError("insufficient samples for " + std::to_string(number_of_samples) +
                              ": available per class " + std::to_string(by_class[0].size()) + "/" +
                              std::to_string(by_class[1].size()));

    Rng rng(seed);
    std::vector<std::size_t> chosen;
    for (auto& members : by_class) {
        rng.shuffle(members);
        chosen.insert(chosen.end(), members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(per_class));
    }
    rng.shuffle(chosen);

    Dataset ds;
    ds.samples.reserve(chosen.size());
    for (auto i : chosen) ds.samples.push_back(samples[i]);
    ds.meta.number_of_samples = ds.samples.size();
    ds.meta.sample_length = ds.samples.empty() ? 0 : ds.samples.front().values.size();
    std::vector<std::string> grids;
    for (const auto& s : ds.samples) grids.push_back(s.provenance.grid);
    std::sort(grids.begin(), grids.end());
    ds.meta.number_of_grids =
        static_cast<std::size_t>(std::unique(grids.begin(), grids.end()) - grids.begin());
    return ds;
}

ScalingStats fit_scaling(const Dataset& dataset, std::span<const std::size_t> train_indices) {
    if (train_indices.empty()) throw ValidationError("scaling needs at least one training sample");
    const auto length = dataset.samples.at(train_indices.front()).values.size();
    ScalingStats stats{std::vector<double>(length, 0.0), std::vector<double>(length, 0.0)};
    const double n = static_cast<double>(train_indices.size());
    for (auto i : train_indices) {
        const auto& v = dataset.samples.at(i).values;
        for (std::size_t k = 0; k < length; ++k) stats.mean[k] += v[k];
    }
    for (auto& m : stats.mean) m /= n;
    for (auto i : train_indices) {
        const auto& v = dataset.samples[i].values;
        for (std::size_t k = 0; k < length; ++k) {
            const double d = v[k] - stats.mean[k];
            stats.std[k] += d * d;
        }
    }
    for (auto& s : stats.std) s = std::sqrt(s / n);
    return stats;
}

Dataset apply_scaling(const Dataset& dataset, const ScalingStats& stats) {
    Dataset out = dataset;
    for (auto& s : out.samples) {
        if (s.values.size() != stats.mean.size())
            throw ValidationError("sample length does not match scaling statistics");
        for (std::size_t k = 0; k < s.values.size(); ++k)
            s.values[k] = stats.std[k] < 1e-12 ? 0.0 : (s.values[k] - stats.mean[k]) / stats.std[k];
    }
    out.meta.scaling = stats;
    return out;
}

Dataset scale(const Dataset& dataset, std::span<const std::size_t> train_indices) {
    return apply_scaling(dataset, fit_scaling(dataset, train_indices));
}

std::vector<RawRecord> raw_records(const TimeSeriesResult& result, const Scenario& scenario) {
    const auto& bus = scenario.monitored_bus;
    const auto b = result.bus_index(bus);
    const auto d = result.device_index(scenario.monitored_device);
    std::vector<RawRecord> rows(result.steps());
    for (std::size_t t = 0; t < rows.size(); ++t)
        rows[t] = {scenario.id,          scenario.grid,         scenario.monitored_device, bus, t,
                   result.bus_vm[b][t], result.device_p[d][t], result.device_q[d][t],
                   scenario.label()};
    return rows;
}

namespace {

void check_csv_field(const std::string& field) {
    if (field.find_first_of(",\n\r") != std::string::npos)
        throw ValidationError("CSV field '" + field + "' contains a separator");
}

void append_double(std::string& line, double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    line.append(buf, static_cast<std::size_t>(n));
}

std::vector<std::string_view> split_row(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t at = 0;
    for (;;) {
        const auto comma = line.find(',', at);
        fields.push_back(line.substr(at, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - at));
        if (comma == std::string_view::npos) break;
        at = comma + 1;
    }
    return fields;
}

template <typename T>
T parse_number(std::string_view text, const std::string& where) {
    T value{};
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw ValidationError(where + ": cannot parse '" + std::string(text) + "'");
    return value;
}

std::ofstream open_for_write(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + path);
    return out;
}

}  // namespace

void save_raw(const std::vector<RawRecord>& records, const std::string& path) {
    auto out = open_for_write(path);
    out << kRawHeader << "\n";
    std::string line;
    for (const auto& r : records) {
        check_csv_field(r.scenario_id);
        check_csv_field(r.grid);
        check_csv_field(r.device_id);
        check_csv_field(r.bus_id);
        line.clear();
        line += r.scenario_id + "," + r.grid + "," + r.device_id + "," + r.bus_id + "," +
                std::to_string(r.step) + ",";
        append_double(line, r.v_pu);
        line += ',';
        append_double(line, r.p_pu);
        line += ',';
        append_double(line, r.q_pu);
        line += ',';
        line += std::to_string(r.label);
        line += '\n';
        out << line;
    }
    if (!out) throw RuntimeFailure("write failed for " + path);
}

std::vector<RawRecord> load_raw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open raw data " + path);
    std::string line;
    if (!std::getline(in, line) || line != kRawHeader)
        throw ValidationError(path + ": header must be '" + std::string(kRawHeader) + "'");
    std::vector<RawRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto where = path + ":" + std::to_string(line_no);
        const auto f = split_row(line);
        if (f.size() != 9)
            throw ValidationError(where + ": expected 9 columns, found " + std::to_string(f.size()));
        RawRecord r;
        r.scenario_id = f[0];
        r.grid = f[1];
        r.device_id = f[2];
        r.bus_id = f[3];
        r.step = parse_number<std::size_t>(f[4], where);
        r.v_pu = parse_number<double>(f[5], where);
        r.p_pu = parse_number<double>(f[6], where);
        r.q_pu = parse_number<double>(f[7], where);
        r.label = parse_number<int>(f[8], where);
        if (r.label != 0 && r.label != 1) throw ValidationError(where + ": label outside {0, 1}");
        records.push_back(std::move(r));
    }
    return records;
}

void save_substation(const std::vector<SubstationRow>& rows, const std::string& path) {
    auto out = open_for_write(path);
    out << kSubstationHeader << "\n";
    std::string line;
    for (const auto& r : rows) {
        check_csv_field(r.scenario_id);
        line.clear();
        line += r.scenario_id + "," + std::to_string(r.step) + ",";
        for (double v : {r.record.v, r.record.p, r.record.q, r.record.i}) {
            append_double(line, v);
            line += ',';
        }
        line += std::to_string(r.label);
        line += '\n';
        out << line;
    }
    if (!out) throw RuntimeFailure("write failed for " + path);
}

std::vector<SubstationRow> load_substation(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open substation data " + path);
    std::string line;
    if (!std::getline(in, line) || line != kSubstationHeader)
        throw ValidationError(path + ": header must be '" + std::string(kSubstationHeader) + "'");
    std::vector<SubstationRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto where = path + ":" + std::to_string(line_no);
        const auto f = split_row(line);
        if (f.size() != 7)
            throw ValidationError(where + ": expected 7 columns, found " + std::to_string(f.size()));
        SubstationRow r;
        r.scenario_id = f[0];
        r.step = parse_number<std::size_t>(f[1], where);
        r.record = {parse_number<double>(f[2], where), parse_number<double>(f[3], where),
                    parse_number<double>(f[4], where), parse_number<double>(f[5], where)};
        r.label = parse_number<int>(f[6], where);
        if (r.label != 0 && r.label != 1) throw ValidationError(where + ": label outside {0, 1}");
        rows.push_back(std::move(r));
    }
    return rows;
}

SubstationDataset substation_windows(const std::vector<SubstationRow>& rows,
                                     std::size_t window_length,
                                     const std::map<std::string, std::string>& grid_of) {
    if (window_length == 0) throw ValidationError("window length must be positive");
    SubstationDataset ds;
    ds.window_length = window_length;
    std::size_t at = 0;
    while (at < rows.size()) {
        std::size_t end = at;
        while (end < rows.size() && rows[end].scenario_id == rows[at].scenario_id) ++end;
        const auto grid_it = grid_of.find(rows[at].scenario_id);
        const std::string grid = grid_it == grid_of.end() ? std::string() : grid_it->second;
        for (std::size_t start = at; start + window_length <= end; start += window_length) {
            SubstationWindow w;
            w.label = rows[start].label;
            w.scenario = rows[start].scenario_id;
            w.grid = grid;
            w.window_start = rows[start].step;
            for (auto& c : w.channels) c.reserve(window_length);
            for (std::size_t k = start; k < start + window_length; ++k) {
                const auto& r = rows[k].record;
                w.channels[0].push_back(r.v);
                w.channels[1].push_back(r.p);
                w.channels[2].push_back(r.q);
                w.channels[3].push_back(r.i);
            }
            ds.windows.push_back(std::move(w));
        }
        at = end;
    }
    return ds;
}

namespace {

struct ScenarioOutput {
    std::vector<RawRecord> raw;
    std::vector<Sample> samples;
};

[[noreturn]] void report_failures(const std::vector<std::string>& failures, std::size_t total) {
    std::string msg = std::to_string(failures.size()) + " of " + std::to_string(total) +
                      " scenarios failed:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw RuntimeFailure(msg);
}

}  // namespace

GeneratedData generate_device_data(const DatagenSettings& settings,
                                   const std::vector<GridModel>& grids, std::size_t sample_length,
                                   Channel channel, int workers) {
    GeneratedData data;
    data.scenarios = build_scenarios(settings, grids);
    const auto& scenarios = data.scenarios;
    auto task = [&](std::size_t i) {
        const auto& sc = scenarios[i];
        const auto job = materialize(sc, grids[sc.grid_index], settings);
        const auto result = simulate_timeseries(job.grid, job.profiles, job.horizon, job.settings);
        return ScenarioOutput{raw_records(result, sc),
                              extract_samples(result, sc, sample_length, channel)};
    };
    auto outcomes = workers > 1 ? parallel_map<ScenarioOutput>(scenarios.size(), workers, task)
                                : serial_map<ScenarioOutput>(scenarios.size(), task);

    std::vector<std::string> failures;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        if (!outcomes[i].ok()) failures.push_back(scenarios[i].id + ": " + outcomes[i].error);
    if (!failures.empty()) report_failures(failures, scenarios.size());

    for (auto& o : outcomes) {
        auto& out = *o.value;
        data.raw.insert(data.raw.end(), std::make_move_iterator(out.raw.begin()),
                        std::make_move_iterator(out.raw.end()));
        data.samples.insert(data.samples.end(), std::make_move_iterator(out.samples.begin()),
                            std::make_move_iterator(out.samples.end()));
    }
    return data;
}

GeneratedSubstation generate_substation_data(const DatagenSettings& settings,
                                             const std::vector<GridModel>& grids, int workers) {
    GeneratedSubstation data;
    data.scenarios = build_scenarios(settings, grids);
    const auto& scenarios = data.scenarios;
    auto task = [&](std::size_t i) {
        const auto& sc = scenarios[i];
        const auto job = materialize(sc, grids[sc.grid_index], settings);
        const auto result = simulate_timeseries(job.grid, job.profiles, job.horizon, job.settings);
        std::vector<SubstationRow> rows(result.steps());
        for (std::size_t t = 0; t < rows.size(); ++t)
            rows[t] = {sc.id, t, result.substation[t], sc.label()};
        return rows;
    };
    auto outcomes = workers > 1
                        ? parallel_map<std::vector<SubstationRow>>(scenarios.size(), workers, task)
                        : serial_map<std::vector<SubstationRow>>(scenarios.size(), task);
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        if (!outcomes[i].ok()) failures.push_back(scenarios[i].id + ": " + outcomes[i].error);
    if (!failures.empty()) report_failures(failures, scenarios.size());
    for (auto& o : outcomes)
        data.rows.insert(data.rows.end(), std::make_move_iterator(o.value->begin()),
                         std::make_move_iterator(o.value->end()));
    return data;
}

SimulatedScenarios simulate_scenarios(const DatagenSettings& settings,
                                      const std::vector<GridModel>& grids, int workers) {
    SimulatedScenarios data;
    data.scenarios = build_scenarios(settings, grids);
    const auto& scenarios = data.scenarios;
    auto task = [&](std::size_t i) {
        const auto& sc = scenarios[i];
        const auto job = materialize(sc, grids[sc.grid_index], settings);
        return simulate_timeseries(job.grid, job.profiles, job.horizon, job.settings);
    };
    auto outcomes = workers > 1 ? parallel_map<TimeSeriesResult>(scenarios.size(), workers, task)
                                : serial_map<TimeSeriesResult>(scenarios.size(), task);
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        if (!outcomes[i].ok()) failures.push_back(scenarios[i].id + ": " + outcomes[i].error);
    if (!failures.empty()) report_failures(failures, scenarios.size());
    for (auto& o : outcomes) data.results.push_back(std::move(*o.value));
    return data;
}

}  // namespace gridguard
