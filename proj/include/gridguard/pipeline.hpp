#pragma once

#include "gridguard/analysis.hpp"
#include "gridguard/baselines.hpp"
#include "gridguard/config.hpp"
#include "gridguard/datagen.hpp"
#include "gridguard/evaluation.hpp"
#include "gridguard/recurrent.hpp"
#include "gridguard/regression.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gridguard {

/// Grid files (*.json) of the grid data folder in name order, truncated to
/// number_of_grids when that is set.
std::vector<GridModel> load_grids(const ExperimentConfig& config);

DatagenSettings datagen_settings(const ExperimentConfig& config);

/// `<raw data folder>/<dataset name>`
std::string dataset_prefix(const ExperimentConfig& config);
std::string raw_csv_path(const ExperimentConfig& config);
std::string substation_csv_path(const ExperimentConfig& config);
std::string model_prefix(const ExperimentConfig& config);

struct GenerateOutcome {
    bool skipped = false;
    std::size_t scenarios = 0;
    std::size_t windows_available = 0;
    Dataset dataset;
    std::vector<std::string> artifacts;
};

/// Simulates, windows and assembles the device-level dataset, then writes
/// the raw CSV and the dataset container. With raw_data_available the
/// existing container is loaded instead. number_of_samples is a cap: the
/// assembled size is min(cap, 2 * smaller class count).
GenerateOutcome run_generate(const ExperimentConfig& config);

/// A fitted window classifier: recurrent network on per-position scaled
/// values, or logistic regression / kNN on standardized summary features.
struct ModelBundle {
    std::string classifier;
    std::optional<RecurrentModel> rnn;
    ScalingStats scaling;
    StandardScaler feature_scaler;
    LogisticModel logistic;
    Matrix knn_train;
    std::vector<int> knn_labels;
    std::size_t knn_k = 5;
};

ModelBundle fit_model(const Dataset& train, const ExperimentConfig& config, std::uint64_t seed);
std::vector<int> predict_windows(const ModelBundle& model, const Dataset& data, int workers = 1);

/// `<prefix>.manifest.json` + `<prefix>.f64`
void save_model(const ModelBundle& model, const std::string& prefix);
ModelBundle load_model(const std::string& prefix);

/// Per-window scores plus per-device scores after majority voting over each
/// scenario's windows.
struct DetectionScores {
    ScoreReport windows;
    ScoreReport devices;
};

DetectionScores score_detection(const Dataset& test, std::span<const int> predicted);

/// Fits on `train` and scores `test`.
DetectionScores detect_windows(const Dataset& train, const Dataset& test, const ExperimentConfig& config,
                               std::uint64_t seed, ModelBundle* fitted = nullptr);

struct DeviceDetectionResult {
    DetectionScores test;
    std::vector<ScoreReport> folds;  ///< cross-validation on the training side when k_folds > 1
    std::vector<std::string> artifacts;
};

/// Train mode: split, optional k-fold CV, fit, score, save. Eval mode: load
/// the saved model and score the same held-out split.
DeviceDetectionResult run_device_detection(const ExperimentConfig& config);

/// Standardized summary features of the four substation channels per window.
struct TransformerData {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::string> grids;
    std::vector<std::string> scenarios;
    std::string target_grid;
};

/// Loads the substation CSV (or simulates it when raw_data_available is
/// false) and builds the per-window features.
TransformerData prepare_transformer_data(const ExperimentConfig& config);

struct TransformerResult {
    ScoreReport report;
    std::size_t components = 0;
    double retained_variance = 0.0;
    std::size_t simulation_windows = 0;
    std::size_t calibration_windows = 0;
    std::size_t test_windows = 0;
    Dendrogram dendrogram;
    std::vector<std::string> dendrogram_sources;  ///< leaf i: "target" or "simulation"
};

/// Held-out target-grid windows are scored by a classifier trained on every
/// other grid plus round(rate * pool) labeled target windows; the features
/// go through PCA keeping >= 95% of the variance.
TransformerResult transformer_detect(const TransformerData& data, const ExperimentConfig& config,
                                     double calibration_rate);

TransformerResult run_transformer_detection(const ExperimentConfig& config);

struct EstimationOutput {
    bool identity = false;  ///< nothing to estimate
    double rmse_mlp = 0.0;
    double rmse_ols = 0.0;
    Matrix mlp_predicted;
    Matrix ols_predicted;
};

/// MLP estimator and OLS benchmark (one per target column) fitted on the
/// training rows, both scored on the test rows.
EstimationOutput estimate_loads(const Matrix& x_train, const Matrix& y_train, const Matrix& x_test,
                                const Matrix& y_test, const MlpConfig& mlp);

struct StageReport {
    std::string stage;
    bool ok = true;
    std::string error;
    nlohmann::json metrics = nlohmann::json::object();
    std::optional<ScoreReport> scores;
};

struct PipelineReport {
    std::vector<StageReport> stages;
    std::vector<std::string> artifacts;

    bool ok() const;
    const StageReport* stage(const std::string& name) const;
};

void to_json(nlohmann::json& j, const StageReport& stage);
void to_json(nlohmann::json& j, const PipelineReport& report);

StageReport estimation_stage(const EstimationOutput& estimation);

/// Estimation, window mining and detection over simulated scenarios. A
/// failing stage is recorded and ends the run.
PipelineReport run_detection_application(const ExperimentConfig& config);

/// Sweeps config.learning.grid_search. calibration_rate drives transformer
/// detection; learning_rate, number_of_epochs, mini_batch_size and knn_k
/// drive device detection.
GridSearchResult run_gridsearch(const ExperimentConfig& config);

/// Sample line plots (when plot_samples is set) and a re-plot of an existing
/// grid-search table.
std::vector<std::string> run_plot(const ExperimentConfig& config);

/// The only results file that carries wall-clock time.
void write_run_info(const ExperimentConfig& config, const std::string& command, const std::string& started,
                    const std::string& finished);

}  // namespace gridguard
