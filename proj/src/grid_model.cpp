#include "gridguard/grid_model.hpp"

#include "gridguard/error.hpp"
#include "gridguard/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

namespace gridguard {

using nlohmann::json;

const Bus* GridModel::find_bus(std::string_view id) const {
    auto it = std::find_if(buses.begin(), buses.end(), [&](const Bus& b) { return b.id == id; });
    return it == buses.end() ? nullptr : &*it;
}

const Device* GridModel::find_device(std::string_view id) const {
    auto it = std::find_if(devices.begin(), devices.end(),
                           [&](const Device& d) { return d.id == id; });
    return it == devices.end() ? nullptr : &*it;
}

std::optional<std::size_t> GridModel::slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].kind == BusKind::Slack) return i;
    return std::nullopt;
}

std::vector<std::string> GridModel::pq_bus_ids() const {
    std::vector<std::string> ids;
    for (const auto& b : buses)
        if (b.kind == BusKind::PQ) ids.push_back(b.id);
    return ids;
}

std::string ValidationReport::summary() const {
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v;
    }
    return out;
}

ValidationReport validate_radial(const GridModel& grid) {
    ValidationReport report;
    auto& v = report.violations;

    std::unordered_map<std::string, std::size_t> index;
    std::size_t slack_count = 0;
    for (std::size_t i = 0; i < grid.buses.size(); ++i) {
        const auto& bus = grid.buses[i];
        if (!index.emplace(bus.id, i).second) v.push_back("duplicate bus id '" + bus.id + "'");
        if (bus.kind == BusKind::Slack) ++slack_count;
    }
    if (slack_count != 1)
        v.push_back("expected exactly one slack bus, found " + std::to_string(slack_count));
    if (grid.buses.empty()) return report;

    std::vector<std::vector<std::size_t>> adjacency(grid.buses.size());
    for (const auto& line : grid.lines) {
        const auto from = index.find(line.from);
        const auto to = index.find(line.to);
        if (from == index.end() || to == index.end()) {
            v.push_back("line " + line.from + "->" + line.to + " has a dangling endpoint");
            continue;
        }
        if (from->second == to->second) {
            v.push_back("line " + line.from + "->" + line.to + " is a self loop");
            continue;
        }
        if (!(line.r_pu >= 0.0) || !(line.x_pu >= 0.0) || !std::isfinite(line.r_pu) ||
            !std::isfinite(line.x_pu))
            v.push_back("line " + line.from + "->" + line.to + " has negative or invalid impedance");
        adjacency[from->second].push_back(to->second);
        adjacency[to->second].push_back(from->second);
    }

    if (grid.lines.size() + 1 != grid.buses.size())
        v.push_back("not radial: " + std::to_string(grid.lines.size()) + " lines for " +
                    std::to_string(grid.buses.size()) + " buses");

    const std::size_t root = grid.slack_index().value_or(0);
    std::vector<bool> seen(grid.buses.size(), false);
    std::queue<std::size_t> frontier;
    frontier.push(root);
    seen[root] = true;
    while (!frontier.empty()) {
        const auto at = frontier.front();
        frontier.pop();
        for (auto next : adjacency[at])
            if (!seen[next]) {
                seen[next] = true;
                frontier.push(next);
            }
    }
    for (std::size_t i = 0; i < grid.buses.size(); ++i)
        if (!seen[i]) v.push_back("bus '" + grid.buses[i].id + "' is not connected to the slack");

    std::set<std::string> device_ids;
    for (const auto& d : grid.devices) {
        if (!device_ids.insert(d.id).second) v.push_back("duplicate device id '" + d.id + "'");
        if (!index.contains(d.bus))
            v.push_back("device '" + d.id + "' references unknown bus '" + d.bus + "'");
        if (!(d.rated_pu > 0.0) || !std::isfinite(d.rated_pu))
            v.push_back("device '" + d.id + "' must have positive rated power");
    }
    return report;
}

namespace {

void require_fields(const json& obj, std::initializer_list<std::string_view> required,
                    std::initializer_list<std::string_view> optional, std::string_view what) {
    if (!obj.is_object()) throw ValidationError(std::string(what) + " must be an object");
    for (auto key : required)
        if (!obj.contains(key))
            throw ValidationError(std::string(what) + " is missing field '" + std::string(key) +
                                  "'");
    for (const auto& [key, value] : obj.items()) {
        const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                           std::find(optional.begin(), optional.end(), key) != optional.end();
        if (!known) throw ValidationError(std::string(what) + " has unknown field '" + key + "'");
    }
}

template <typename T>
T field(const json& obj, const char* key, std::string_view what) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string(what) + " field '" + key + "' has the wrong type");
    }
}

}  // namespace

GridModel load_grid(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("grid document does not parse: ") + e.what());
    }
    require_fields(doc, {"name", "base_mva", "buses", "lines"}, {"devices"}, "grid document");

    GridModel grid;
    grid.name = field<std::string>(doc, "name", "grid");
    grid.base_mva = field<double>(doc, "base_mva", "grid");
    if (!(grid.base_mva > 0.0)) throw ValidationError("grid base_mva must be positive");

    for (const auto& b : doc.at("buses")) {
        require_fields(b, {"id", "kind", "base_kv"}, {}, "bus");
        Bus bus;
        bus.id = field<std::string>(b, "id", "bus");
        const auto kind = field<std::string>(b, "kind", "bus");
        if (kind == "slack") bus.kind = BusKind::Slack;
        else if (kind == "pq") bus.kind = BusKind::PQ;
        else throw ValidationError("bus '" + bus.id + "' has unknown kind '" + kind + "'");
        bus.base_kv = field<double>(b, "base_kv", "bus");
        grid.buses.push_back(std::move(bus));
    }
    for (const auto& l : doc.at("lines")) {
        require_fields(l, {"from", "to", "r_pu", "x_pu"}, {}, "line");
        grid.lines.push_back({field<std::string>(l, "from", "line"),
                              field<std::string>(l, "to", "line"), field<double>(l, "r_pu", "line"),
                              field<double>(l, "x_pu", "line")});
    }
    if (doc.contains("devices")) {
        for (const auto& d : doc.at("devices")) {
            require_fields(d, {"id", "bus", "kind", "rated_pu", "variant"}, {"curve"}, "device");
            Device device;
            device.id = field<std::string>(d, "id", "device");
            device.bus = field<std::string>(d, "bus", "device");
            device.kind = parse_device_kind(field<std::string>(d, "kind", "device"));
            device.rated_pu = field<double>(d, "rated_pu", "device");
            device.curve = resolve_variant(device.kind,
                                           parse_variant(field<std::string>(d, "variant", "device")));
            if (d.contains("curve")) device.curve.curve = curve_from_json(d.at("curve"));
            grid.devices.push_back(std::move(device));
        }
    }

    const auto report = validate_radial(grid);
    if (!report.ok()) throw ValidationError("invalid grid '" + grid.name + "': " + report.summary());
    return grid;
}

GridModel load_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open grid file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return load_grid(buffer.str());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::string export_grid(const GridModel& grid) {
    json doc;
    doc["name"] = grid.name;
    doc["base_mva"] = grid.base_mva;
    doc["buses"] = json::array();
    for (const auto& b : grid.buses)
        doc["buses"].push_back({{"id", b.id},
                                {"kind", b.kind == BusKind::Slack ? "slack" : "pq"},
                                {"base_kv", b.base_kv}});
    doc["lines"] = json::array();
    for (const auto& l : grid.lines)
        doc["lines"].push_back({{"from", l.from}, {"to", l.to}, {"r_pu", l.r_pu}, {"x_pu", l.x_pu}});
    if (!grid.devices.empty()) {
        doc["devices"] = json::array();
        for (const auto& d : grid.devices) {
            json entry = {{"id", d.id},
                          {"bus", d.bus},
                          {"kind", std::string(to_string(d.kind))},
                          {"rated_pu", d.rated_pu},
                          {"variant", std::string(to_string(d.curve.variant))}};
            if (d.curve != resolve_variant(d.kind, d.curve.variant)) entry["curve"] = d.curve.curve;
            doc["devices"].push_back(std::move(entry));
        }
    }
    return doc.dump(2) + "\n";
}

std::size_t placement_count(double percent, std::size_t eligible) {
    if (!(percent >= 0.0 && percent <= 100.0))
        throw ValidationError("device percentage must lie in [0, 100]");
    return static_cast<std::size_t>(std::floor(percent * static_cast<double>(eligible) / 100.0 + 0.5));
}

double default_rated_pu(DeviceKind kind) {
    switch (kind) {
        case DeviceKind::EV: return 0.04;
        case DeviceKind::PV: return 0.03;
        case DeviceKind::BESS: return 0.02;
        case DeviceKind::HP: return 0.02;
    }
    return 0.0;
}

GridModel place_devices(const GridModel& grid, const std::map<DeviceKind, double>& percentages,
                        std::uint64_t seed, const std::map<DeviceKind, double>& rated_pu) {
    GridModel placed = grid;
    const auto eligible = grid.pq_bus_ids();
    for (const auto& [kind, percent] : percentages) {
        const auto count = placement_count(percent, eligible.size());
        if (count > eligible.size())
            throw ValidationError("requested more devices than eligible buses");
        auto order = eligible;
        Rng rng(derive_seed(seed, to_string(kind)));
        rng.shuffle(order);
        order.resize(count);
        std::set<std::string> chosen(order.begin(), order.end());

        const auto rating = rated_pu.contains(kind) ? rated_pu.at(kind) : default_rated_pu(kind);
        for (const auto& bus : eligible) {
            if (!chosen.contains(bus)) continue;
            Device d;
            d.id = std::string(to_string(kind)) + "_" + bus;
            d.bus = bus;
            d.kind = kind;
            d.rated_pu = rating;
            d.curve = resolve_variant(kind, Variant::Correct);
            placed.devices.push_back(std::move(d));
        }
    }
    const auto report = validate_radial(placed);
    if (!report.ok()) throw ValidationError("placement produced an invalid grid: " + report.summary());
    return placed;
}

GridModel random_radial_feeder(std::size_t bus_count, std::uint64_t seed,
                               const FeederOptions& options) {
    if (bus_count < 1) throw ValidationError("feeder needs at least one bus");
    Rng rng(seed);
    GridModel grid;
    grid.name = "random_" + std::to_string(bus_count) + "_" + std::to_string(seed);
    grid.base_mva = 1.0;
    for (std::size_t i = 0; i < bus_count; ++i)
        grid.buses.push_back({"b" + std::to_string(i), i == 0 ? BusKind::Slack : BusKind::PQ, 0.4});
    for (std::size_t i = 1; i < bus_count; ++i) {
        const auto parent = rng.below(i);
        grid.lines.push_back({"b" + std::to_string(parent), "b" + std::to_string(i),
                              rng.uniform(options.r_min, options.r_max),
                              rng.uniform(options.x_min, options.x_max)});
    }
    return grid;
}

}  // namespace gridguard
