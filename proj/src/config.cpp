#include "gridguard/config.hpp"

#include "gridguard/error.hpp"
#include "gridguard/recurrent.hpp"

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace gridguard {

namespace fs = std::filesystem;

namespace {

class Section {
public:
    Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

    std::string key(std::string_view k) const { return name_ + "." + std::string(k); }

    const toml::node* get(std::string_view k) {
        seen_.insert(std::string(k));
        return table_ ? table_->get(k) : nullptr;
    }

    void read(std::string_view k, std::string& out) {
        if (auto* n = get(k)) {
            if (!n->is_string()) type_error(k, "a string");
            out = n->value<std::string>().value();
        }
    }
    void read(std::string_view k, bool& out) {
        if (auto* n = get(k)) {
            if (!n->is_boolean()) type_error(k, "a boolean");
            out = n->value<bool>().value();
        }
    }
    void read(std::string_view k, int& out) {
        if (auto* n = get(k)) out = static_cast<int>(as_integer(k, *n));
    }
    void read(std::string_view k, long& out) {
        if (auto* n = get(k)) out = static_cast<long>(as_integer(k, *n));
    }
    void read(std::string_view k, std::optional<long>& out) {
        if (auto* n = get(k)) out = static_cast<long>(as_integer(k, *n));
    }
    void read(std::string_view k, std::uint64_t& out) {
        if (auto* n = get(k)) {
            const auto v = as_integer(k, *n);
            if (v < 0) throw ValidationError("config key '" + key(k) + "' must be non-negative");
            out = static_cast<std::uint64_t>(v);
        }
    }
    void read(std::string_view k, double& out) {
        if (auto* n = get(k)) out = as_number(k, *n);
    }
    void read(std::string_view k, std::vector<int>& out) {
        if (auto* n = get(k)) {
            const auto* arr = n->as_array();
            if (!arr) type_error(k, "an array of integers");
            out.clear();
            for (const auto& e : *arr) out.push_back(static_cast<int>(as_integer(k, e)));
        }
    }
    void read(std::string_view k, std::vector<std::string>& out) {
        if (auto* n = get(k)) {
            const auto* arr = n->as_array();
            if (!arr) type_error(k, "an array of strings");
            out.clear();
            for (const auto& e : *arr) {
                if (!e.is_string()) type_error(k, "an array of strings");
                out.push_back(e.value<std::string>().value());
            }
        }
    }
    void read(std::string_view k, std::map<std::string, double>& out) {
        if (auto* n = get(k)) {
            const auto* t = n->as_table();
            if (!t) type_error(k, "a table of numbers");
            for (const auto& [name, value] : *t) {
                const std::string kind(name.str());
                if (!out.count(kind))
                    throw ValidationError("config key '" + key(k) + "' has unknown entry '" + kind + "'");
                out[kind] = as_number(k, value);
            }
        }
    }
    void read(std::string_view k, GridSearchSpec& out) {
        if (auto* n = get(k)) {
            const auto* t = n->as_table();
            if (!t) type_error(k, "a table {parameter, values}");
            for (const auto& [name, value] : *t) {
                if (name.str() == "parameter") {
                    if (!value.is_string()) type_error(k, "a table {parameter, values}");
                    out.parameter = value.value<std::string>().value();
                } else if (name.str() == "values") {
                    const auto* arr = value.as_array();
                    if (!arr) type_error(k, "a table {parameter, values}");
                    out.values.clear();
                    for (const auto& e : *arr) out.values.push_back(as_number(k, e));
                } else {
                    throw ValidationError("config key '" + key(k) + "' has unknown entry '" +
                                          std::string(name.str()) + "'");
                }
            }
        }
    }

    void reject_unknown() const {
        if (!table_) return;
        for (const auto& [k, v] : *table_)
            if (!seen_.count(std::string(k.str())))
                throw ValidationError("unknown config key '" + key(k.str()) + "'");
    }

private:
    [[noreturn]] void type_error(std::string_view k, const char* expected) const {
        throw ValidationError("config key '" + key(k) + "' must be " + expected);
    }
    std::int64_t as_integer(std::string_view k, const toml::node& n) const {
        if (!n.is_integer()) type_error(k, "an integer");
        return n.value<std::int64_t>().value();
    }
    double as_number(std::string_view k, const toml::node& n) const {
        if (n.is_integer()) return static_cast<double>(n.value<std::int64_t>().value());
        if (!n.is_floating_point()) type_error(k, "a number");
        return n.value<double>().value();
    }

    const toml::table* table_;
    std::string name_;
    std::set<std::string> seen_;
};

const toml::table* section(const toml::table& root, std::string_view name) {
    const auto* node = root.get(name);
    if (!node) return nullptr;
    if (!node->is_table()) throw ValidationError("config section '" + std::string(name) + "' must be a table");
    return node->as_table();
}

std::string resolve(const std::string& base, const std::string& p) {
    const fs::path path(p);
    if (path.is_absolute()) return path.lexically_normal().string();
    return (fs::path(base) / path).lexically_normal().string();
}

void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ValidationError("config key '" + key + "' " + what);
}

}  // namespace

std::string ExperimentConfig::grid_data_path() const { return resolve(base_directory, paths.grid_data_folder); }
std::string ExperimentConfig::raw_data_path() const { return resolve(base_directory, paths.raw_data_folder); }
std::string ExperimentConfig::results_path() const { return resolve(base_directory, paths.results_folder); }

SolverSettings ExperimentConfig::solver() const {
    SolverSettings s;
    s.tolerance = simulation.voltage_tolerance;
    s.max_iterations = simulation.max_iterations;
    s.droop_damping = simulation.droop_damping;
    s.droop_tolerance = simulation.droop_tolerance;
    return s;
}

DeviceKind ExperimentConfig::device_kind() const { return parse_device_kind(learning.type); }

int ExperimentConfig::workers() const { return simulation.parallel_computing ? simulation.cores : 1; }

void ExperimentConfig::validate() const {
    check(learning.mode == "train" || learning.mode == "eval", "learning.mode", "must be 'train' or 'eval'");
    check(learning.type == "EV" || learning.type == "PV", "learning.type", "must be 'EV' or 'PV'");
    check(learning.rnn_model_settings.size() >= 3 && learning.rnn_model_settings[0] == 1 &&
              learning.rnn_model_settings[1] >= 1 && learning.rnn_model_settings[2] >= 1,
          "learning.rnn_model_settings", "must be [1, hidden >= 1, layers >= 1, ...]");
    check(learning.number_of_epochs >= 1, "learning.number_of_epochs", "must be >= 1");
    check(learning.learning_rate > 0.0 && std::isfinite(learning.learning_rate), "learning.learning_rate",
          "must be positive");
    check(learning.decision_criteria == "majority vote", "learning.decision_criteria",
          "must be 'majority vote'");
    parse_activation(learning.activation_function);
    check(learning.mini_batch_size >= 1, "learning.mini_batch_size", "must be >= 1");
    check(learning.optimizer == "SGD", "learning.optimizer", "must be 'SGD'");
    check(learning.k_folds >= 1, "learning.k_folds", "must be >= 1");
    check(learning.early_stopping_patience >= 1, "learning.early_stopping_patience", "must be >= 1");
    check(learning.lr_adjustment == "warm up" || learning.lr_adjustment == "none", "learning.lr_adjustment",
          "must be 'warm up' or 'none'");
    check(learning.percent_of_epochs_for_warm_up >= 0 && learning.percent_of_epochs_for_warm_up <= 100,
          "learning.percent_of_epochs_for_warm_up", "must lie in [0, 100]");
    check(learning.train_test_split > 0 && learning.train_test_split < 1, "learning.train_test_split",
          "must lie in (0, 1)");
    for (const auto& m : learning.metrics)
        check(m == "accuracy" || m == "precision_macro" || m == "recall_macro" || m == "f1_macro",
              "learning.metrics", "has unknown metric '" + m + "'");
    check(learning.classifier == "RNN" || learning.classifier == "logistic" || learning.classifier == "knn",
          "learning.classifier", "must be 'RNN', 'logistic' or 'knn'");
    check(!learning.grid_search.parameter.empty(), "learning.grid_search", "needs a parameter name");
    check(learning.calibration_rate >= 0 && learning.calibration_rate <= 1, "learning.calibration_rate",
          "must lie in [0, 1]");
    check(learning.knn_k >= 1, "learning.knn_k", "must be >= 1");
    check(learning.channel == "P" || learning.channel == "V", "learning.channel", "must be 'P' or 'V'");
    check(learning.linkage == "single" || learning.linkage == "complete" || learning.linkage == "average",
          "learning.linkage", "must be 'single', 'complete' or 'average'");
    check(learning.measured_fraction >= 0 && learning.measured_fraction <= 1, "learning.measured_fraction",
          "must lie in [0, 1]");

    check(dataset.sample_length >= 2, "dataset.sample_length", "must be >= 2");
    check(dataset.number_of_samples >= 2 && dataset.number_of_samples % 2 == 0, "dataset.number_of_samples",
          "must be an even number >= 2");
    check(dataset.number_of_grids >= 0, "dataset.number_of_grids", "must be >= 0");

    check(simulation.cores >= 1, "simulation.cores", "must be >= 1");
    check(simulation.sim_length >= 1, "simulation.sim_length", "must be >= 1");
    check(simulation.step_size == 1 || simulation.step_size == 5 || simulation.step_size == 15 ||
              simulation.step_size == 60,
          "simulation.step_size", "must be 1, 5, 15 or 60");
    for (const auto& [kind, pct] : simulation.percentage)
        check(pct >= 0 && pct <= 100, "simulation.percentage", kind + " must lie in [0, 100]");
    for (const auto& [kind, rated] : simulation.rated_pu)
        check(rated > 0, "simulation.rated_pu", kind + " must be positive");
    check(simulation.broken_control_curve_choice == 1 || simulation.broken_control_curve_choice == 2,
          "simulation.broken_control_curve_choice", "must be 1 (flat) or 2 (inverted)");
    if (simulation.t_start) check(*simulation.t_start >= 0, "simulation.t_start", "must be >= 0");
    if (simulation.t_start && simulation.t_end)
        check(*simulation.t_end > *simulation.t_start, "simulation.t_end", "must be after t_start");
    check(simulation.household_rated_pu >= 0, "simulation.household_rated_pu", "must be >= 0");
    check(simulation.household_noise_sigma >= 0, "simulation.household_noise_sigma", "must be >= 0");
    check(simulation.substation_days >= 1, "simulation.substation_days", "must be >= 1");
    check(simulation.substation_step_size == 1 || simulation.substation_step_size == 5 ||
              simulation.substation_step_size == 15 || simulation.substation_step_size == 60,
          "simulation.substation_step_size", "must be 1, 5, 15 or 60");
    check(simulation.substation_window_minutes >= 2 * simulation.substation_step_size &&
              simulation.substation_window_minutes % simulation.substation_step_size == 0,
          "simulation.substation_window_minutes", "must be a multiple of the step spanning >= 2 steps");
    try {
        solver().validate();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("config [simulation] solver settings: ") + e.what());
    }
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_directory) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "config does not parse: " << e.description() << " (line " << e.source().begin.line << ")";
        throw ValidationError(msg.str());
    }
    for (const auto& [k, v] : root) {
        const auto name = k.str();
        if (name != "paths" && name != "learning" && name != "dataset" && name != "simulation")
            throw ValidationError("unknown config section '" + std::string(name) + "'");
    }

    ExperimentConfig c;
    c.base_directory = base_directory;

    Section paths(section(root, "paths"), "paths");
    paths.read("grid_data_folder", c.paths.grid_data_folder);
    paths.read("raw_data_folder", c.paths.raw_data_folder);
    paths.read("results_folder", c.paths.results_folder);
    paths.reject_unknown();

    auto& l = c.learning;
    Section learning(section(root, "learning"), "learning");
    learning.read("mode", l.mode);
    learning.read("dataset", l.dataset);
    learning.read("type", l.type);
    learning.read("rnn_model_settings", l.rnn_model_settings);
    learning.read("number_of_epochs", l.number_of_epochs);
    learning.read("learning_rate", l.learning_rate);
    learning.read("decision_criteria", l.decision_criteria);
    learning.read("activation_function", l.activation_function);
    learning.read("mini_batch_size", l.mini_batch_size);
    learning.read("optimizer", l.optimizer);
    learning.read("k_folds", l.k_folds);
    learning.read("early_stopping", l.early_stopping);
    learning.read("early_stopping_patience", l.early_stopping_patience);
    learning.read("lr_adjustment", l.lr_adjustment);
    learning.read("percent_of_epochs_for_warm_up", l.percent_of_epochs_for_warm_up);
    learning.read("train_test_split", l.train_test_split);
    learning.read("metrics", l.metrics);
    learning.read("plot_samples", l.plot_samples);
    learning.read("classifier", l.classifier);
    learning.read("save_model", l.save_model);
    learning.read("do_grid_search", l.do_grid_search);
    learning.read("grid_search", l.grid_search);
    learning.read("calibration_rate", l.calibration_rate);
    learning.read("knn_k", l.knn_k);
    learning.read("channel", l.channel);
    learning.read("linkage", l.linkage);
    learning.read("measured_fraction", l.measured_fraction);
    learning.reject_unknown();

    Section dataset(section(root, "dataset"), "dataset");
    dataset.read("raw_data_available", c.dataset.raw_data_available);
    dataset.read("sample_length", c.dataset.sample_length);
    dataset.read("number_of_samples", c.dataset.number_of_samples);
    dataset.read("number_of_grids", c.dataset.number_of_grids);
    dataset.reject_unknown();

    auto& s = c.simulation;
    Section sim(section(root, "simulation"), "simulation");
    sim.read("parallel_computing", s.parallel_computing);
    sim.read("cores", s.cores);
    sim.read("sim_length", s.sim_length);
    sim.read("step_size", s.step_size);
    sim.read("percentage", s.percentage);
    sim.read("rated_pu", s.rated_pu);
    sim.read("broken_control_curve_choice", s.broken_control_curve_choice);
    sim.read("t_start", s.t_start);
    sim.read("t_end", s.t_end);
    sim.read("master_seed", s.master_seed);
    sim.read("household_rated_pu", s.household_rated_pu);
    sim.read("household_noise_sigma", s.household_noise_sigma);
    sim.read("voltage_tolerance", s.voltage_tolerance);
    sim.read("max_iterations", s.max_iterations);
    sim.read("droop_damping", s.droop_damping);
    sim.read("droop_tolerance", s.droop_tolerance);
    sim.read("substation_days", s.substation_days);
    sim.read("substation_step_size", s.substation_step_size);
    sim.read("substation_window_minutes", s.substation_window_minutes);
    sim.read("target_grid", s.target_grid);
    sim.reject_unknown();

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    auto dir = fs::path(path).parent_path();
    if (dir.empty()) dir = ".";
    try {
        return parse_config(buf.str(), dir.string());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

namespace {

toml::array number_array(const std::vector<double>& values) {
    toml::array a;
    for (double v : values) a.push_back(v);
    return a;
}

toml::table number_table(const std::map<std::string, double>& values) {
    toml::table t;
    for (const auto& [k, v] : values) t.insert(k, v);
    return t;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
    toml::table paths{{"grid_data_folder", c.paths.grid_data_folder},
                      {"raw_data_folder", c.paths.raw_data_folder},
                      {"results_folder", c.paths.results_folder}};

    const auto& l = c.learning;
    toml::array rnn;
    for (int v : l.rnn_model_settings) rnn.push_back(v);
    toml::array metrics;
    for (const auto& m : l.metrics) metrics.push_back(m);
    toml::table learning{{"mode", l.mode},
                         {"dataset", l.dataset},
                         {"type", l.type},
                         {"rnn_model_settings", rnn},
                         {"number_of_epochs", l.number_of_epochs},
                         {"learning_rate", l.learning_rate},
                         {"decision_criteria", l.decision_criteria},
                         {"activation_function", l.activation_function},
                         {"mini_batch_size", l.mini_batch_size},
                         {"optimizer", l.optimizer},
                         {"k_folds", l.k_folds},
                         {"early_stopping", l.early_stopping},
                         {"early_stopping_patience", l.early_stopping_patience},
                         {"lr_adjustment", l.lr_adjustment},
                         {"percent_of_epochs_for_warm_up", l.percent_of_epochs_for_warm_up},
                         {"train_test_split", l.train_test_split},
                         {"metrics", metrics},
                         {"plot_samples", l.plot_samples},
                         {"classifier", l.classifier},
                         {"save_model", l.save_model},
                         {"do_grid_search", l.do_grid_search},
                         {"grid_search", toml::table{{"parameter", l.grid_search.parameter},
                                                     {"values", number_array(l.grid_search.values)}}},
                         {"calibration_rate", l.calibration_rate},
                         {"knn_k", l.knn_k},
                         {"channel", l.channel},
                         {"linkage", l.linkage},
                         {"measured_fraction", l.measured_fraction}};

    toml::table dataset{{"raw_data_available", c.dataset.raw_data_available},
                        {"sample_length", c.dataset.sample_length},
                        {"number_of_samples", static_cast<std::int64_t>(c.dataset.number_of_samples)},
                        {"number_of_grids", c.dataset.number_of_grids}};

    const auto& s = c.simulation;
    toml::table sim{{"parallel_computing", s.parallel_computing},
                    {"cores", s.cores},
                    {"sim_length", s.sim_length},
                    {"step_size", s.step_size},
                    {"percentage", number_table(s.percentage)},
                    {"rated_pu", number_table(s.rated_pu)},
                    {"broken_control_curve_choice", s.broken_control_curve_choice},
                    {"master_seed", static_cast<std::int64_t>(s.master_seed)},
                    {"household_rated_pu", s.household_rated_pu},
                    {"household_noise_sigma", s.household_noise_sigma},
                    {"voltage_tolerance", s.voltage_tolerance},
                    {"max_iterations", s.max_iterations},
                    {"droop_damping", s.droop_damping},
                    {"droop_tolerance", s.droop_tolerance},
                    {"substation_days", s.substation_days},
                    {"substation_step_size", s.substation_step_size},
                    {"substation_window_minutes", s.substation_window_minutes},
                    {"target_grid", s.target_grid}};
    if (s.t_start) sim.insert("t_start", static_cast<std::int64_t>(*s.t_start));
    if (s.t_end) sim.insert("t_end", static_cast<std::int64_t>(*s.t_end));

    toml::table root{{"paths", paths}, {"learning", learning}, {"dataset", dataset}, {"simulation", sim}};
    std::ostringstream out;
    out << root << "\n";
    return out.str();
}

}  // namespace gridguard
