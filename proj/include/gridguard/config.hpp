#pragma once

#include "gridguard/control_curves.hpp"
#include "gridguard/evaluation.hpp"
#include "gridguard/powerflow.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridguard {

struct PathsConfig {
    std::string grid_data_folder = "raw_data_generation/input";
    std::string raw_data_folder = "raw_data";
    std::string results_folder = "results";

    bool operator==(const PathsConfig&) const = default;
};

struct LearningConfig {
    std::string mode = "train";  ///< train, eval
    std::string dataset = "7day_200k";
    std::string type = "EV";     ///< device kind under scrutiny
    std::vector<int> rnn_model_settings{1, 2, 20, 5};  ///< io dim, hidden, layers, unused
    int number_of_epochs = 20;
    double learning_rate = 1e-6;
    std::string decision_criteria = "majority vote";
    std::string activation_function = "relu";
    int mini_batch_size = 60;
    std::string optimizer = "SGD";
    int k_folds = 5;
    bool early_stopping = true;
    int early_stopping_patience = 3;
    std::string lr_adjustment = "warm up";
    double percent_of_epochs_for_warm_up = 10.0;
    double train_test_split = 0.3;
    std::vector<std::string> metrics{"accuracy", "precision_macro", "recall_macro", "f1_macro"};
    bool plot_samples = true;
    std::string classifier = "RNN";  ///< RNN, logistic, knn
    bool save_model = true;
    bool do_grid_search = true;
    GridSearchSpec grid_search{"calibration_rate",
                               {0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1}};
    double calibration_rate = 0.0;
    int knn_k = 5;
    std::string channel = "P";
    std::string linkage = "average";
    double measured_fraction = 0.5;

    bool operator==(const LearningConfig&) const = default;
};

struct DatasetConfig {
    bool raw_data_available = true;
    int sample_length = 7 * 96;
    long number_of_samples = 200000;
    int number_of_grids = 0;  ///< 0: every grid file in the grid data folder

    bool operator==(const DatasetConfig&) const = default;
};

struct SimulationConfig {
    bool parallel_computing = true;
    int cores = 12;
    int sim_length = 365;  ///< days
    int step_size = 15;    ///< minutes
    std::map<std::string, double> percentage{{"PV", 0}, {"EV", 25}, {"BESS", 0}, {"HP", 0}};
    std::map<std::string, double> rated_pu{{"PV", 0.03}, {"EV", 0.04}, {"BESS", 0.02}, {"HP", 0.02}};
    int broken_control_curve_choice = 2;  ///< 1 = flat, 2 = inverted
    std::optional<long> t_start;          ///< minutes; absent: inferred from profiles
    std::optional<long> t_end;
    std::uint64_t master_seed = 0;
    double household_rated_pu = 0.025;
    double household_noise_sigma = 0.05;
    double voltage_tolerance = 1e-8;
    int max_iterations = 100;
    double droop_damping = 0.5;
    double droop_tolerance = 1e-7;
    int substation_days = 28;
    int substation_step_size = 1;
    int substation_window_minutes = 1440;
    std::string target_grid;  ///< empty: the last grid

    bool operator==(const SimulationConfig&) const = default;
};

struct ExperimentConfig {
    PathsConfig paths;
    LearningConfig learning;
    DatasetConfig dataset;
    SimulationConfig simulation;
    std::string base_directory = ".";  ///< relative paths resolve against this

    std::string grid_data_path() const;
    std::string raw_data_path() const;
    std::string results_path() const;

    SolverSettings solver() const;
    DeviceKind device_kind() const;
    /// Worker count actually used: 1 unless parallel computing is on.
    int workers() const;

    /// Range and enum checks; throws ValidationError naming the key.
    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses TOML text; absent keys keep their defaults, unknown keys and wrong
/// types are rejected with the offending key in the message.
ExperimentConfig parse_config(const std::string& text, const std::string& base_directory = ".");

/// Reads a config file; relative paths inside resolve against its folder.
ExperimentConfig load_config(const std::string& path);

/// TOML text that parses back to an equal config.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace gridguard
