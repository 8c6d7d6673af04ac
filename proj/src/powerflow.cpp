#include "gridguard/powerflow.hpp"

#include "gridguard/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace gridguard {

void SolverSettings::validate() const {
    if (!(tolerance > 0.0)) throw ValidationError("solver tolerance must be positive");
    if (max_iterations < 1) throw ValidationError("solver max_iterations must be >= 1");
    if (!(droop_damping > 0.0 && droop_damping <= 1.0))
        throw ValidationError("droop damping must lie in (0, 1]");
    if (!(droop_tolerance > 0.0)) throw ValidationError("droop tolerance must be positive");
}

RadialNetwork::RadialNetwork(const GridModel& grid) {
    const auto report = validate_radial(grid);
    if (!report.ok()) throw ValidationError("grid '" + grid.name + "' is not radial-valid: " + report.summary());

    const auto n = grid.buses.size();
    ids_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ids_.push_back(grid.buses[i].id);
        index_.emplace(grid.buses[i].id, i);
    }
    slack_ = *grid.slack_index();

    struct Edge {
        std::size_t to;
        Complex z;
    };
    std::vector<std::vector<Edge>> adjacency(n);
    for (const auto& line : grid.lines) {
        const auto a = index_.at(line.from);
        const auto b = index_.at(line.to);
        const Complex z{line.r_pu, line.x_pu};
        adjacency[a].push_back({b, z});
        adjacency[b].push_back({a, z});
    }

    parent_.assign(n, n);
    z_.assign(n, Complex{});
    parent_[slack_] = slack_;
    std::queue<std::size_t> frontier;
    frontier.push(slack_);
    while (!frontier.empty()) {
        const auto at = frontier.front();
        frontier.pop();
        order_.push_back(at);
        for (const auto& e : adjacency[at]) {
            if (parent_[e.to] != n) continue;
            parent_[e.to] = at;
            z_[e.to] = e.z;
            frontier.push(e.to);
        }
    }
}

std::size_t RadialNetwork::index_of(const std::string& bus_id) const {
    const auto it = index_.find(bus_id);
    if (it == index_.end()) throw ValidationError("unknown bus '" + bus_id + "'");
    return it->second;
}

PowerFlowResult RadialNetwork::solve(std::span<const Complex> loads,
                                     const SolverSettings& settings,
                                     std::span<const Complex> initial) const {
    const auto n = bus_count();
    if (loads.size() != n) throw ValidationError("load vector does not match bus count");

    PowerFlowResult result;
    if (initial.size() == n) result.voltages.assign(initial.begin(), initial.end());
    else result.voltages.assign(n, settings.slack_voltage);
    auto& v = result.voltages;
    v[slack_] = settings.slack_voltage;

    std::vector<Complex> branch(n);
    for (int it = 1; it <= settings.max_iterations; ++it) {
        result.iterations = it;
        // backward: accumulate branch currents leaves -> root
        for (std::size_t k = 0; k < n; ++k) branch[k] = std::conj(loads[k] / v[k]);
        for (std::size_t k = n; k-- > 1;) {
            const auto bus = order_[k];
            branch[parent_[bus]] += branch[bus];
        }
        // forward: voltage drops root -> leaves
        double max_dv = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            const auto bus = order_[k];
            const Complex updated = v[parent_[bus]] - z_[bus] * branch[bus];
            max_dv = std::max(max_dv, std::abs(updated - v[bus]));
            v[bus] = updated;
        }
        if (!std::isfinite(max_dv)) {
            result.converged = false;
            result.diagnostic = "non-finite voltage at sweep " + std::to_string(it) +
                                " (voltage collapse)";
            return result;
        }
        if (max_dv < settings.tolerance) {
            result.converged = true;
            return result;
        }
    }
    result.diagnostic = "no convergence within " + std::to_string(settings.max_iterations) + " sweeps";
    return result;
}

Complex RadialNetwork::slack_power(std::span<const Complex> voltages) const {
    Complex current{};
    for (std::size_t k = 1; k < order_.size(); ++k) {
        const auto bus = order_[k];
        if (parent_[bus] == slack_) current += (voltages[slack_] - voltages[bus]) / z_[bus];
    }
    return voltages[slack_] * std::conj(current);
}

double RadialNetwork::max_power_mismatch(std::span<const Complex> loads,
                                         std::span<const Complex> voltages) const {
    const auto n = bus_count();
    std::vector<Complex> net(n);  // current arriving at each bus from the network
    for (std::size_t k = 1; k < n; ++k) {
        const auto bus = order_[k];
        const Complex flow = (voltages[parent_[bus]] - voltages[bus]) / z_[bus];
        net[bus] += flow;
        net[parent_[bus]] -= flow;
    }
    double worst = 0.0;
    for (std::size_t bus = 0; bus < n; ++bus) {
        if (bus == slack_) continue;
        worst = std::max(worst, std::abs(voltages[bus] * std::conj(net[bus]) - loads[bus]));
    }
    return worst;
}

PowerFlowResult solve_snapshot(const GridModel& grid, std::span<const Injection> injections,
                               const SolverSettings& settings) {
    settings.validate();
    const RadialNetwork network(grid);
    std::vector<Complex> loads(network.bus_count());
    for (const auto& inj : injections) {
        if (!std::isfinite(inj.s.real()) || !std::isfinite(inj.s.imag()))
            throw ValidationError("injection at '" + inj.bus + "' is not finite");
        loads[network.index_of(inj.bus)] += inj.s;
    }
    return network.solve(loads, settings);
}

DroopResult solve_droop(const RadialNetwork& network, std::span<const Complex> base_loads,
                        std::span<const DroopDevice> devices, const SolverSettings& settings,
                        std::span<const Complex> initial_voltages) {
    const auto n = network.bus_count();
    DroopResult out;
    out.device_p.resize(devices.size());

    auto target = [&](std::size_t j, std::span<const Complex> v) {
        const auto& d = devices[j];
        if (d.available == 0.0) return 0.0;
        return d.sign * d.curve->eval(std::abs(v[d.bus])) * d.available;
    };

    std::vector<Complex> start(n, settings.slack_voltage);
    if (initial_voltages.size() == n) start.assign(initial_voltages.begin(), initial_voltages.end());
    for (std::size_t j = 0; j < devices.size(); ++j) out.device_p[j] = target(j, start);

    std::vector<Complex> loads(base_loads.begin(), base_loads.end());
    auto solve_with_devices = [&](std::span<const Complex> warm) {
        std::copy(base_loads.begin(), base_loads.end(), loads.begin());
        for (std::size_t j = 0; j < devices.size(); ++j) loads[devices[j].bus] += out.device_p[j];
        return network.solve(loads, settings, warm);
    };

    out.flow = solve_with_devices(start);
    for (int outer = 1; outer <= settings.max_iterations; ++outer) {
        out.outer_iterations = outer;
        if (!out.flow.converged) return out;
        double change = 0.0;
        std::vector<double> goal(devices.size());
        for (std::size_t j = 0; j < devices.size(); ++j) {
            goal[j] = target(j, out.flow.voltages);
            change = std::max(change, std::abs(goal[j] - out.device_p[j]));
        }
        if (change < settings.droop_tolerance) {
            out.converged = true;
            return out;
        }
        for (std::size_t j = 0; j < devices.size(); ++j)
            out.device_p[j] += settings.droop_damping * (goal[j] - out.device_p[j]);
        const auto warm = out.flow.voltages;
        out.flow = solve_with_devices(warm);
    }
    out.flow.diagnostic = "droop fixed point did not settle within " +
                          std::to_string(settings.max_iterations) + " passes";
    return out;
}

DroopResult solve_with_droop(const GridModel& grid, std::span<const Injection> base_injections,
                             std::span<const Device> devices, const SolverSettings& settings) {
    settings.validate();
    const RadialNetwork network(grid);
    std::vector<Complex> loads(network.bus_count());
    for (const auto& inj : base_injections) loads[network.index_of(inj.bus)] += inj.s;
    std::vector<DroopDevice> state;
    for (const auto& d : devices)
        state.push_back({network.index_of(d.bus), d.rated_pu, consumption_sign(d.kind), &d.curve.curve});
    return solve_droop(network, loads, state, settings);
}

std::size_t TimeSeriesResult::bus_index(const std::string& id) const {
    const auto it = std::find(bus_ids.begin(), bus_ids.end(), id);
    if (it == bus_ids.end()) throw ValidationError("result has no bus '" + id + "'");
    return static_cast<std::size_t>(it - bus_ids.begin());
}

std::size_t TimeSeriesResult::device_index(const std::string& id) const {
    const auto it = std::find(device_ids.begin(), device_ids.end(), id);
    if (it == device_ids.end()) throw ValidationError("result has no device '" + id + "'");
    return static_cast<std::size_t>(it - device_ids.begin());
}

TimeSeriesResult simulate_timeseries(const GridModel& grid, const ProfileAssignment& profiles,
                                     const Horizon& horizon, const SolverSettings& settings) {
    settings.validate();
    check_step_minutes(horizon.step_minutes);
    const RadialNetwork network(grid);
    const long step = horizon.step_minutes;

    long shortest = std::numeric_limits<long>::max();
    auto check_profile = [&](const Profile& p, const std::string& owner) {
        if (p.step_minutes != horizon.step_minutes)
            throw ValidationError("profile for '" + owner + "' has step " +
                                  std::to_string(p.step_minutes) + " min, simulation uses " +
                                  std::to_string(step) + " min");
        shortest = std::min(shortest, static_cast<long>(p.size()) * step);
    };
    for (const auto& [bus, load] : profiles.bus_loads) {
        network.index_of(bus);
        check_profile(load.profile, bus);
    }
    for (const auto& d : grid.devices) {
        const auto it = profiles.device_availability.find(d.id);
        if (it == profiles.device_availability.end())
            throw ValidationError("no availability profile for device '" + d.id + "'");
        check_profile(it->second, d.id);
    }
    if (shortest == std::numeric_limits<long>::max())
        throw ValidationError("no profiles assigned; cannot infer the horizon");

    const long t_start = horizon.t_start_minutes.value_or(0);
    const long t_end = horizon.t_end_minutes.value_or(shortest);
    if (t_start < 0 || t_start % step != 0 || t_end % step != 0)
        throw ValidationError("horizon bounds must be non-negative multiples of the step");
    if (t_end <= t_start) throw ValidationError("empty simulation horizon");
    if (t_end > shortest)
        throw ValidationError("profiles cover only " + std::to_string(shortest) +
                              " minutes, horizon ends at " + std::to_string(t_end));
    const auto steps = static_cast<std::size_t>((t_end - t_start) / step);
    const auto first = static_cast<std::size_t>(t_start / step);

    TimeSeriesResult result;
    result.step_minutes = horizon.step_minutes;
    result.t_start_minutes = t_start;
    result.bus_ids = network.bus_ids();
    result.bus_vm.assign(network.bus_count(), std::vector<double>(steps));
    for (const auto& d : grid.devices) result.device_ids.push_back(d.id);
    result.device_p.assign(grid.devices.size(), std::vector<double>(steps));
    result.device_q.assign(grid.devices.size(), std::vector<double>(steps, 0.0));
    result.substation.resize(steps);

    struct BusLoad {
        std::size_t bus;
        const LoadProfile* load;
    };
    std::vector<BusLoad> bus_loads;
    for (const auto& [bus, load] : profiles.bus_loads) bus_loads.push_back({network.index_of(bus), &load});
    std::vector<DroopDevice> devices;
    std::vector<const Profile*> availability;
    for (const auto& d : grid.devices) {
        devices.push_back({network.index_of(d.bus), 0.0, consumption_sign(d.kind), &d.curve.curve});
        availability.push_back(&profiles.device_availability.at(d.id));
    }

    std::vector<Complex> base(network.bus_count());
    std::vector<Complex> warm;
    for (std::size_t t = 0; t < steps; ++t) {
        const auto k = first + t;
        std::fill(base.begin(), base.end(), Complex{});
        for (const auto& bl : bus_loads) {
            const double p = bl.load->profile.values[k] * bl.load->p_scale;
            base[bl.bus] += Complex{p, p * bl.load->q_ratio};
        }
        for (std::size_t j = 0; j < devices.size(); ++j)
            devices[j].available = availability[j]->values[k] * grid.devices[j].rated_pu;

        const auto solved = solve_droop(network, base, devices, settings, warm);
        if (!solved.converged)
            throw RuntimeFailure("scenario aborted at step " + std::to_string(t) + ": " +
                                 solved.flow.diagnostic);
        const auto& v = solved.flow.voltages;
        for (std::size_t b = 0; b < v.size(); ++b) result.bus_vm[b][t] = std::abs(v[b]);
        for (std::size_t j = 0; j < devices.size(); ++j) result.device_p[j][t] = solved.device_p[j];

        const Complex s = network.slack_power(v);
        const double vs = std::abs(v[network.slack()]);
        result.substation[t] = {vs, s.real(), s.imag(), std::abs(s) / vs};
        warm = v;
    }
    return result;
}

}  // namespace gridguard
