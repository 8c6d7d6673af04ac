#include "gridguard/pipeline.hpp"

#include "gridguard/error.hpp"
#include "gridguard/report.hpp"
#include "gridguard/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace gridguard {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string path_in(const std::string& folder, const std::string& name) {
    return (fs::path(folder) / name).string();
}

std::string results_dir(const ExperimentConfig& c, const std::string& sub) {
    return path_in(c.results_path(), sub);
}

std::uint64_t master(const ExperimentConfig& c) { return c.simulation.master_seed; }

Matrix summary_features(const Dataset& data) {
    Matrix x(data.size(), kSummaryFeatures);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto f = feature_summary(data.samples[i].values);
        std::copy(f.begin(), f.end(), x.row(i).begin());
    }
    return x;
}

TrainConfig train_config(const ExperimentConfig& c, std::uint64_t seed) {
    const auto& l = c.learning;
    TrainConfig t;
    t.epochs = l.number_of_epochs;
    t.base_lr = l.learning_rate;
    t.batch_size = static_cast<std::size_t>(l.mini_batch_size);
    t.warmup_fraction = l.lr_adjustment == "warm up" ? l.percent_of_epochs_for_warm_up / 100.0 : 0.0;
    t.early_stopping = l.early_stopping;
    t.patience = l.early_stopping_patience;
    t.k_folds = l.k_folds;
    t.split = l.train_test_split;
    t.seed = seed;
    return t;
}

RunMetadata run_meta(const ExperimentConfig& c, const std::string& model) {
    RunMetadata m;
    m.dataset = c.learning.dataset;
    m.model = model;
    m.hyperparameters["device_type"] = c.learning.type;
    m.hyperparameters["malfunction_choice"] = std::to_string(c.simulation.broken_control_curve_choice);
    if (model == "RNN") {
        m.hyperparameters["hidden"] = std::to_string(c.learning.rnn_model_settings[1]);
        m.hyperparameters["layers"] = std::to_string(c.learning.rnn_model_settings[2]);
        m.hyperparameters["activation"] = c.learning.activation_function;
        m.hyperparameters["epochs"] = std::to_string(c.learning.number_of_epochs);
        char lr[32];
        std::snprintf(lr, sizeof lr, "%g", c.learning.learning_rate);
        m.hyperparameters["learning_rate"] = lr;
        m.hyperparameters["mini_batch_size"] = std::to_string(c.learning.mini_batch_size);
    } else if (model == "knn") {
        m.hyperparameters["k"] = std::to_string(c.learning.knn_k);
    }
    return m;
}

std::vector<Bar> metric_bars(const ExperimentConfig& c, const ScoreReport& r) {
    std::vector<Bar> bars;
    for (const auto& m : c.learning.metrics) {
        if (m == "accuracy") bars.push_back({m, r.accuracy});
        else if (m == "precision_macro") bars.push_back({m, r.precision_macro});
        else if (m == "recall_macro") bars.push_back({m, r.recall_macro});
        else if (m == "f1_macro") bars.push_back({m, r.f1_macro});
    }
    return bars;
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
    to.insert(to.end(), from.begin(), from.end());
}

std::vector<std::string> emit_sample_plot(const ExperimentConfig& c, const Dataset& data,
                                          const std::string& folder) {
    if (!c.learning.plot_samples) return {};
    std::vector<Series> series;
    for (int label : {0, 1})
        for (const auto& s : data.samples)
            if (s.label == label) {
                series.push_back({(label == 0 ? "correct " : "malfunction ") + s.provenance.device, s.values});
                break;
            }
    if (series.empty()) return {};
    return emit_line_plot(folder, "samples", "sample windows (" + data.meta.channel + ")", series);
}

}  // namespace

// ---------------------------------------------------------------- data

std::vector<GridModel> load_grids(const ExperimentConfig& c) {
    const auto folder = c.grid_data_path();
    if (!fs::is_directory(folder)) throw ValidationError("grid data folder not found: " + folder);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(folder))
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ValidationError("no grid files (*.json) in " + folder);
    if (c.dataset.number_of_grids > 0) {
        if (static_cast<std::size_t>(c.dataset.number_of_grids) > files.size())
            throw ValidationError("number_of_grids = " + std::to_string(c.dataset.number_of_grids) + " but only " +
                                  std::to_string(files.size()) + " grid files in " + folder);
        files.resize(static_cast<std::size_t>(c.dataset.number_of_grids));
    }
    std::vector<GridModel> grids;
    for (const auto& f : files) grids.push_back(load_grid_file(f));
    return grids;
}

DatagenSettings datagen_settings(const ExperimentConfig& c) {
    DatagenSettings s;
    s.percentages.clear();
    for (const auto& [kind, pct] : c.simulation.percentage) s.percentages[parse_device_kind(kind)] = pct;
    for (const auto& [kind, rated] : c.simulation.rated_pu) s.rated_pu[parse_device_kind(kind)] = rated;
    s.device_kind = c.device_kind();
    s.malfunction_choice = c.simulation.broken_control_curve_choice;
    s.sim_days = c.simulation.sim_length;
    s.step_minutes = c.simulation.step_size;
    s.t_start_minutes = c.simulation.t_start;
    s.t_end_minutes = c.simulation.t_end;
    s.household_rated_pu = c.simulation.household_rated_pu;
    s.household_noise_sigma = c.simulation.household_noise_sigma;
    s.master_seed = c.simulation.master_seed;
    s.solver = c.solver();
    return s;
}

std::string dataset_prefix(const ExperimentConfig& c) { return path_in(c.raw_data_path(), c.learning.dataset); }
std::string raw_csv_path(const ExperimentConfig& c) { return dataset_prefix(c) + "_raw.csv"; }
std::string substation_csv_path(const ExperimentConfig& c) { return dataset_prefix(c) + "_substation.csv"; }
std::string model_prefix(const ExperimentConfig& c) {
    return path_in(results_dir(c, "model"), c.learning.dataset + "_" + c.learning.classifier);
}

GenerateOutcome run_generate(const ExperimentConfig& c) {
    GenerateOutcome out;
    const auto prefix = dataset_prefix(c);
    if (c.dataset.raw_data_available) {
        out.skipped = true;
        if (!fs::exists(prefix + ".manifest.json"))
            throw ValidationError("raw_data_available is set but no dataset container at " + prefix +
                                  ".manifest.json; set raw_data_available = false to simulate one");
        out.dataset = load_dataset(prefix);
        out.windows_available = out.dataset.size();
        return out;
    }

    const auto grids = load_grids(c);
    const auto settings = datagen_settings(c);
    const auto sample_length = static_cast<std::size_t>(c.dataset.sample_length);
    auto generated = generate_device_data(settings, grids, sample_length, parse_channel(c.learning.channel),
                                          c.workers());
    out.scenarios = generated.scenarios.size();
    out.windows_available = generated.samples.size();

    std::array<std::size_t, 2> counts{};
    for (const auto& s : generated.samples) ++counts[static_cast<std::size_t>(s.label)];
    const auto cap = static_cast<std::size_t>(c.dataset.number_of_samples);
    const auto n = std::min(cap, 2 * std::min(counts[0], counts[1]));
    if (n == 0) throw RuntimeFailure("simulation produced no complete windows of both classes");

    out.dataset = assemble_dataset(generated.samples, n, derive_seed(master(c), "assemble"));
    out.dataset.meta.name = c.learning.dataset;
    out.dataset.meta.number_of_grids = grids.size();
    out.dataset.meta.device_kind = c.learning.type;
    out.dataset.meta.channel = c.learning.channel;
    out.dataset.meta.malfunction_choice = c.simulation.broken_control_curve_choice;

    fs::create_directories(c.raw_data_path());
    save_raw(generated.raw, raw_csv_path(c));
    save_dataset(out.dataset, prefix);
    out.artifacts = {raw_csv_path(c), prefix + ".manifest.json", prefix + ".f64"};
    return out;
}

// ---------------------------------------------------------------- models

ModelBundle fit_model(const Dataset& train, const ExperimentConfig& c, std::uint64_t seed) {
    ModelBundle m;
    m.classifier = c.learning.classifier;
    if (train.size() == 0) throw ValidationError("no training windows");
    if (m.classifier == "RNN") {
        std::vector<std::size_t> all(train.size());
        std::iota(all.begin(), all.end(), 0);
        m.scaling = fit_scaling(train, all);
        const auto scaled = apply_scaling(train, m.scaling);
        const auto init = RecurrentModel::random(static_cast<std::size_t>(c.learning.rnn_model_settings[1]),
                                                 static_cast<std::size_t>(c.learning.rnn_model_settings[2]),
                                                 parse_activation(c.learning.activation_function),
                                                 derive_seed(seed, "init"));
        m.rnn = rnn_train(init, scaled, train_config(c, seed)).model;
        return m;
    }
    const auto features = summary_features(train);
    m.feature_scaler = StandardScaler::fit(features);
    const auto z = m.feature_scaler.transform(features);
    const auto labels = train.labels();
    if (m.classifier == "logistic") {
        m.logistic = logistic_fit(z, labels, 0.5, 500);
    } else {
        m.knn_train = z;
        m.knn_labels = labels;
        m.knn_k = static_cast<std::size_t>(c.learning.knn_k);
    }
    return m;
}

std::vector<int> predict_windows(const ModelBundle& m, const Dataset& data, int workers) {
    std::vector<int> out;
    if (m.classifier == "RNN") {
        if (!m.rnn) throw ValidationError("RNN bundle without a network");
        const auto scaled = apply_scaling(data, m.scaling);
        for (const auto& s : scaled.samples) out.push_back(rnn_predict(*m.rnn, s.values));
        return out;
    }
    const auto z = m.feature_scaler.transform(summary_features(data));
    if (m.classifier == "logistic") {
        for (std::size_t i = 0; i < z.rows(); ++i) out.push_back(m.logistic.predict(z.row(i)));
        return out;
    }
    return knn_predict_batch(m.knn_train, m.knn_labels, m.knn_k, z, workers);
}

void save_model(const ModelBundle& m, const std::string& prefix) {
    std::vector<std::pair<std::string, std::vector<double>>> blocks;
    json manifest{{"format", "gridguard-model"}, {"version", kContainerVersion}, {"classifier", m.classifier}};
    if (m.classifier == "RNN") {
        manifest["hidden"] = m.rnn->hidden();
        manifest["layers"] = m.rnn->layers();
        manifest["activation"] = std::string(to_string(m.rnn->activation()));
        const auto p = m.rnn->parameters();
        blocks.emplace_back("parameters", std::vector<double>(p.begin(), p.end()));
        blocks.emplace_back("scaling_mean", m.scaling.mean);
        blocks.emplace_back("scaling_std", m.scaling.std);
    } else {
        blocks.emplace_back("feature_mean", m.feature_scaler.mean);
        blocks.emplace_back("feature_std", m.feature_scaler.std);
        if (m.classifier == "logistic") {
            auto w = m.logistic.weights;
            w.push_back(m.logistic.intercept);
            blocks.emplace_back("logistic", w);
        } else {
            manifest["k"] = m.knn_k;
            manifest["train_rows"] = m.knn_train.rows();
            manifest["train_cols"] = m.knn_train.cols();
            blocks.emplace_back("train", m.knn_train.data());
            blocks.emplace_back("labels", std::vector<double>(m.knn_labels.begin(), m.knn_labels.end()));
        }
    }
    std::vector<double> flat;
    manifest["blocks"] = json::array();
    for (const auto& [name, values] : blocks) {
        manifest["blocks"].push_back({{"name", name}, {"count", values.size()}});
        flat.insert(flat.end(), values.begin(), values.end());
    }
    manifest["total"] = flat.size();
    fs::create_directories(fs::path(prefix).parent_path());
    write_f64_block(prefix + ".f64", flat);
    write_text(prefix + ".manifest.json", manifest.dump(2) + "\n");
}

ModelBundle load_model(const std::string& prefix) {
    std::ifstream in(prefix + ".manifest.json");
    if (!in) throw ValidationError("no saved model at " + prefix + ".manifest.json");
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(prefix + ".manifest.json: " + e.what());
    }
    try {
        if (manifest.at("format") != "gridguard-model") throw ValidationError("not a model container: " + prefix);
        if (manifest.at("version") != kContainerVersion)
            throw ValidationError("unsupported model container version in " + prefix);
        const auto flat = read_f64_block(prefix + ".f64", manifest.at("total").get<std::size_t>());
        std::map<std::string, std::vector<double>> blocks;
        std::size_t at = 0;
        for (const auto& b : manifest.at("blocks")) {
            const auto count = b.at("count").get<std::size_t>();
            blocks[b.at("name").get<std::string>()] = {flat.begin() + static_cast<long>(at),
                                                       flat.begin() + static_cast<long>(at + count)};
            at += count;
        }
        ModelBundle m;
        m.classifier = manifest.at("classifier").get<std::string>();
        if (m.classifier == "RNN") {
            RecurrentModel model(manifest.at("hidden").get<std::size_t>(), manifest.at("layers").get<std::size_t>(),
                                 parse_activation(manifest.at("activation").get<std::string>()));
            const auto& p = blocks.at("parameters");
            if (p.size() != model.parameters().size()) throw ValidationError("parameter count mismatch in " + prefix);
            std::copy(p.begin(), p.end(), model.parameters().begin());
            m.rnn = std::move(model);
            m.scaling = {blocks.at("scaling_mean"), blocks.at("scaling_std")};
        } else {
            m.feature_scaler.mean = blocks.at("feature_mean");
            m.feature_scaler.std = blocks.at("feature_std");
            if (m.classifier == "logistic") {
                auto w = blocks.at("logistic");
                m.logistic.intercept = w.back();
                w.pop_back();
                m.logistic.weights = w;
            } else {
                m.knn_k = manifest.at("k").get<std::size_t>();
                const auto rows = manifest.at("train_rows").get<std::size_t>();
                const auto cols = manifest.at("train_cols").get<std::size_t>();
                const auto& data = blocks.at("train");
                m.knn_train = Matrix(rows, cols);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t k = 0; k < cols; ++k) m.knn_train(r, k) = data[r * cols + k];
                for (double v : blocks.at("labels")) m.knn_labels.push_back(static_cast<int>(v));
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(prefix + ".manifest.json: " + e.what());
    } catch (const std::out_of_range&) {
        throw ValidationError(prefix + ".manifest.json: missing block");
    }
}

// ---------------------------------------------------------------- detection

DetectionScores score_detection(const Dataset& test, std::span<const int> predicted) {
    if (predicted.size() != test.size()) throw ValidationError("prediction count mismatch");
    DetectionScores out;
    const auto truth = test.labels();
    out.windows = scores(confusion(truth, predicted));

    std::map<std::string, std::pair<int, std::vector<int>>> by_device;
    for (std::size_t i = 0; i < test.size(); ++i) {
        auto& entry = by_device[test.samples[i].provenance.scenario];
        entry.first = test.samples[i].label;
        entry.second.push_back(predicted[i]);
    }
    std::vector<int> device_truth, device_pred;
    for (const auto& [scenario, entry] : by_device) {
        device_truth.push_back(entry.first);
        device_pred.push_back(majority_vote(entry.second));
    }
    out.devices = scores(confusion(device_truth, device_pred));
    return out;
}

DetectionScores detect_windows(const Dataset& train, const Dataset& test, const ExperimentConfig& c,
                               std::uint64_t seed, ModelBundle* fitted) {
    auto model = fit_model(train, c, seed);
    auto out = score_detection(test, predict_windows(model, test, c.workers()));
    out.windows.meta = out.devices.meta = run_meta(c, c.learning.classifier);
    out.windows.meta.hyperparameters["level"] = "window";
    out.devices.meta.hyperparameters["level"] = "device";
    if (fitted) *fitted = std::move(model);
    return out;
}

DeviceDetectionResult run_device_detection(const ExperimentConfig& c) {
    const auto prefix = dataset_prefix(c);
    if (!fs::exists(prefix + ".manifest.json"))
        throw ValidationError("missing dataset " + prefix + ".manifest.json; run generate first");
    const auto data = load_dataset(prefix);
    const auto labels = data.labels();
    const auto split = train_test_split(labels, c.learning.train_test_split, derive_seed(master(c), "split"));
    const auto train = data.subset(split.train);
    const auto test = data.subset(split.test);

    DeviceDetectionResult out;
    const auto folder = results_dir(c, "device_detection");
    if (c.learning.mode == "eval") {
        const auto model = load_model(model_prefix(c));
        if (model.classifier != c.learning.classifier)
            throw ValidationError("saved model is '" + model.classifier + "' but the config selects '" +
                                  c.learning.classifier + "'");
        out.test = score_detection(test, predict_windows(model, test, c.workers()));
        out.test.windows.meta = out.test.devices.meta = run_meta(c, c.learning.classifier);
        out.test.windows.meta.hyperparameters["level"] = "window";
        out.test.devices.meta.hyperparameters["level"] = "device";
    } else {
        if (c.learning.k_folds > 1) {
            const auto folds = kfold(train.labels(), c.learning.k_folds, derive_seed(master(c), "kfold"),
                                     c.learning.train_test_split);
            for (std::size_t f = 0; f < folds.size(); ++f) {
                auto fold = detect_windows(train.subset(folds[f].train), train.subset(folds[f].test), c,
                                           derive_seed(master(c), static_cast<std::uint64_t>(100 + f)));
                fold.windows.meta.hyperparameters["fold"] = std::to_string(f + 1);
                out.folds.push_back(fold.windows);
            }
        }
        ModelBundle model;
        out.test = detect_windows(train, test, c, derive_seed(master(c), "model"), &model);
        if (c.learning.save_model) {
            save_model(model, model_prefix(c));
            append(out.artifacts, {model_prefix(c) + ".manifest.json", model_prefix(c) + ".f64"});
        }
    }

    append(out.artifacts, emit_score_report(folder, "windows", c.learning.mode, out.test.windows));
    append(out.artifacts, emit_score_report(folder, "devices", c.learning.mode, out.test.devices));
    if (!out.folds.empty()) {
        std::string csv = std::string(kScoreCsvHeader) + "\n";
        for (std::size_t f = 0; f < out.folds.size(); ++f)
            csv += score_csv_row("fold" + std::to_string(f + 1), out.folds[f]) + "\n";
        write_text(path_in(folder, "folds.csv"), csv);
        out.artifacts.push_back(path_in(folder, "folds.csv"));
    }
    append(out.artifacts, emit_bar_chart(folder, "device_scores", "device-level scores (majority vote)",
                                         metric_bars(c, out.test.devices)));
    append(out.artifacts, emit_sample_plot(c, test, folder));
    return out;
}

// ---------------------------------------------------------------- transformer level

TransformerData prepare_transformer_data(const ExperimentConfig& c) {
    const auto path = substation_csv_path(c);
    std::vector<SubstationRow> rows;
    if (!c.dataset.raw_data_available) {
        auto settings = datagen_settings(c);
        settings.sim_days = c.simulation.substation_days;
        settings.step_minutes = c.simulation.substation_step_size;
        settings.t_start_minutes.reset();
        settings.t_end_minutes.reset();
        auto generated = generate_substation_data(settings, load_grids(c), c.workers());
        fs::create_directories(c.raw_data_path());
        save_substation(generated.rows, path);
        rows = std::move(generated.rows);
    } else {
        if (!fs::exists(path))
            throw ValidationError("missing substation data " + path + "; set raw_data_available = false to simulate it");
        rows = load_substation(path);
    }

    std::map<std::string, std::string> grid_of;
    for (const auto& r : rows) grid_of.emplace(r.scenario_id, r.scenario_id.substr(0, r.scenario_id.find('/')));
    const auto window = static_cast<std::size_t>(c.simulation.substation_window_minutes / c.simulation.substation_step_size);
    const auto windows = substation_windows(rows, window, grid_of);
    if (windows.windows.empty()) throw ValidationError("substation data holds no complete window");

    TransformerData data;
    data.features = Matrix(windows.windows.size(), 4 * kSummaryFeatures);
    std::set<std::string> grid_names;
    for (std::size_t i = 0; i < windows.windows.size(); ++i) {
        const auto& w = windows.windows[i];
        for (std::size_t ch = 0; ch < 4; ++ch) {
            const auto f = feature_summary(w.channels[ch]);
            std::copy(f.begin(), f.end(), data.features.row(i).begin() + static_cast<long>(ch * kSummaryFeatures));
        }
        data.labels.push_back(w.label);
        data.grids.push_back(w.grid);
        data.scenarios.push_back(w.scenario);
        grid_names.insert(w.grid);
    }
    data.target_grid = c.simulation.target_grid.empty() ? *grid_names.rbegin() : c.simulation.target_grid;
    if (!grid_names.count(data.target_grid))
        throw ValidationError("target_grid '" + data.target_grid + "' has no substation windows");
    if (grid_names.size() < 2)
        throw ValidationError("transformer detection needs at least one simulation grid besides the target grid");
    return data;
}

TransformerResult transformer_detect(const TransformerData& data, const ExperimentConfig& c, double rate) {
    if (rate < 0.0 || rate > 1.0) throw ValidationError("calibration rate must lie in [0, 1]");
    std::vector<std::size_t> target, simulation;
    for (std::size_t i = 0; i < data.labels.size(); ++i)
        (data.grids[i] == data.target_grid ? target : simulation).push_back(i);

    std::vector<int> target_labels;
    for (auto i : target) target_labels.push_back(data.labels[i]);
    const auto split = train_test_split(target_labels, c.learning.train_test_split,
                                        derive_seed(master(c), "transformer-split"));
    auto pool = split.train;
    Rng rng(derive_seed(master(c), "calibration"));
    rng.shuffle(pool);
    const auto n_cal = static_cast<std::size_t>(std::floor(rate * static_cast<double>(pool.size()) + 0.5));
    pool.resize(n_cal);
    std::sort(pool.begin(), pool.end());

    std::vector<std::size_t> train_rows = simulation;
    for (auto p : pool) train_rows.push_back(target[p]);
    std::vector<std::size_t> test_rows;
    for (auto t : split.test) test_rows.push_back(target[t]);

    auto gather = [&](const std::vector<std::size_t>& rows) {
        Matrix m(rows.size(), data.features.cols());
        for (std::size_t r = 0; r < rows.size(); ++r)
            std::copy(data.features.row(rows[r]).begin(), data.features.row(rows[r]).end(), m.row(r).begin());
        return m;
    };
    std::vector<int> y_train, y_test;
    for (auto r : train_rows) y_train.push_back(data.labels[r]);
    for (auto r : test_rows) y_test.push_back(data.labels[r]);

    const auto scaler = StandardScaler::fit(gather(train_rows));
    const auto z_train = scaler.transform(gather(train_rows));
    const auto z_test = scaler.transform(gather(test_rows));

    const auto full = pca_fit(z_train, z_train.cols());
    const auto k = components_for_variance(full, 0.95);
    PcaModel pca = full;
    pca.components = Matrix(k, full.components.cols());
    for (std::size_t r = 0; r < k; ++r)
        std::copy(full.components.row(r).begin(), full.components.row(r).end(), pca.components.row(r).begin());
    pca.eigenvalues.resize(k);
    pca.explained_ratio.resize(k);
    const auto p_train = pca_transform(pca, z_train);
    const auto p_test = pca_transform(pca, z_test);

    TransformerResult out;
    out.components = k;
    out.retained_variance = std::accumulate(pca.explained_ratio.begin(), pca.explained_ratio.end(), 0.0);
    out.simulation_windows = simulation.size();
    out.calibration_windows = n_cal;
    out.test_windows = test_rows.size();

    std::vector<int> predicted;
    const bool use_knn = c.learning.classifier == "knn";
    if (use_knn) {
        predicted = knn_predict_batch(p_train, y_train, static_cast<std::size_t>(c.learning.knn_k), p_test, c.workers());
    } else {
        const auto model = logistic_fit(p_train, y_train, 0.5, 500);
        for (std::size_t i = 0; i < p_test.rows(); ++i) predicted.push_back(model.predict(p_test.row(i)));
    }
    out.report = scores(confusion(y_test, predicted));
    out.report.meta.dataset = c.learning.dataset;
    out.report.meta.model = use_knn ? "transformer-knn" : "transformer-logistic";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", rate);
    out.report.meta.hyperparameters["calibration_rate"] = buf;
    out.report.meta.hyperparameters["pca_components"] = std::to_string(k);
    out.report.meta.hyperparameters["target_grid"] = data.target_grid;

    // target test windows next to simulated windows
    const std::size_t per_side = 10;
    std::vector<std::size_t> leaves;
    for (std::size_t i = 0; i < std::min(per_side, p_test.rows()); ++i) {
        leaves.push_back(i);
        out.dendrogram_sources.push_back("target");
    }
    for (std::size_t i = 0; i < std::min(per_side, simulation.size()); ++i) {
        leaves.push_back(p_test.rows() + i);
        out.dendrogram_sources.push_back("simulation");
    }
    if (leaves.size() >= 2) {
        Matrix points(leaves.size(), k);
        for (std::size_t r = 0; r < leaves.size(); ++r) {
            const auto src = leaves[r] < p_test.rows() ? p_test.row(leaves[r]) : p_train.row(leaves[r] - p_test.rows());
            std::copy(src.begin(), src.end(), points.row(r).begin());
        }
        out.dendrogram = hierarchical_cluster(points, parse_linkage(c.learning.linkage));
    }
    return out;
}

TransformerResult run_transformer_detection(const ExperimentConfig& c) {
    const auto data = prepare_transformer_data(c);
    auto result = transformer_detect(data, c, c.learning.calibration_rate);
    const auto folder = results_dir(c, "transformer_detection");
    char param[32];
    std::snprintf(param, sizeof param, "%g", c.learning.calibration_rate);
    emit_score_report(folder, "scores", param, result.report);
    json pca{{"components", result.components},
             {"retained_variance", result.retained_variance},
             {"simulation_windows", result.simulation_windows},
             {"calibration_windows", result.calibration_windows},
             {"test_windows", result.test_windows},
             {"target_grid", data.target_grid},
             {"dendrogram_leaves", result.dendrogram_sources}};
    write_text(path_in(folder, "summary.json"), pca.dump(2) + "\n");
    if (!result.dendrogram.merges.empty())
        write_text(path_in(folder, "dendrogram.csv"), dendrogram_csv(result.dendrogram));
    return result;
}

// ---------------------------------------------------------------- detection application

EstimationOutput estimate_loads(const Matrix& x_train, const Matrix& y_train, const Matrix& x_test,
                                const Matrix& y_test, const MlpConfig& mlp) {
    EstimationOutput out;
    if (y_train.cols() == 0 || y_test.rows() == 0) {
        out.identity = true;
        return out;
    }
    if (x_train.rows() != y_train.rows() || x_test.rows() != y_test.rows() || y_train.cols() != y_test.cols())
        throw ValidationError("estimate_loads: shape mismatch");

    out.ols_predicted = Matrix(x_test.rows(), y_test.cols());
    std::vector<double> column(y_train.rows());
    for (std::size_t k = 0; k < y_train.cols(); ++k) {
        for (std::size_t r = 0; r < y_train.rows(); ++r) column[r] = y_train(r, k);
        const auto model = ols_fit(x_train, column);
        for (std::size_t r = 0; r < x_test.rows(); ++r) out.ols_predicted(r, k) = model.predict(x_test.row(r));
    }
    const auto net = mlp_fit(x_train, y_train, mlp);
    out.mlp_predicted = mlp_predict(net, x_test);
    out.rmse_ols = rmse(out.ols_predicted, y_test);
    out.rmse_mlp = rmse(out.mlp_predicted, y_test);
    return out;
}

StageReport estimation_stage(const EstimationOutput& e) {
    StageReport s;
    s.stage = "estimation";
    s.metrics = {{"identity", e.identity}, {"rmse_mlp", e.rmse_mlp}, {"rmse_ols", e.rmse_ols}};
    return s;
}

bool PipelineReport::ok() const {
    return std::all_of(stages.begin(), stages.end(), [](const StageReport& s) { return s.ok; });
}

const StageReport* PipelineReport::stage(const std::string& name) const {
    for (const auto& s : stages)
        if (s.stage == name) return &s;
    return nullptr;
}

void to_json(json& j, const StageReport& s) {
    j = json{{"stage", s.stage}, {"ok", s.ok}, {"metrics", s.metrics}};
    if (!s.error.empty()) j["error"] = s.error;
    if (s.scores) j["scores"] = *s.scores;
}

void to_json(json& j, const PipelineReport& r) {
    j = json{{"stages", r.stages}, {"artifacts", r.artifacts}};
}

namespace {

constexpr double kCalibrationShare = 0.7;
constexpr std::size_t kEstimatorFeatures = 6;

void time_features(const TimeSeriesResult& r, std::size_t t, std::span<double> out) {
    const auto& s = r.substation[t];
    const double minute = static_cast<double>(r.t_start_minutes + static_cast<long>(t) * r.step_minutes);
    const double phase = 2.0 * std::numbers::pi * std::fmod(minute, 1440.0) / 1440.0;
    out[0] = s.v;
    out[1] = s.p;
    out[2] = s.q;
    out[3] = s.i;
    out[4] = std::sin(phase);
    out[5] = std::cos(phase);
}

// run_detection_application stages share this state
struct AppState {
    SimulatedScenarios sim;
    std::vector<std::vector<double>> series;  ///< reconstructed monitored-device P per scenario
    std::vector<bool> measured;               ///< monitored device is metered
    std::size_t calibration_steps = 0;
    Dataset train, test;
};

StageReport app_estimation(const ExperimentConfig& c, AppState& st) {
    StageReport stage;
    stage.stage = "estimation";
    st.sim = simulate_scenarios(datagen_settings(c), load_grids(c), c.workers());
    const auto& scenarios = st.sim.scenarios;

    // devices under scrutiny per grid, and which of them are metered
    std::map<std::string, std::vector<std::string>> devices_of;
    for (const auto& s : scenarios) {
        auto& list = devices_of[s.grid];
        if (std::find(list.begin(), list.end(), s.monitored_device) == list.end()) list.push_back(s.monitored_device);
    }
    std::map<std::string, std::set<std::string>> metered;
    std::size_t n_measured = 0, n_unmeasured = 0;
    for (auto [grid, list] : devices_of) {
        Rng rng(derive_seed(master(c), "measured:" + grid));
        rng.shuffle(list);
        const auto keep = static_cast<std::size_t>(
            std::floor(c.learning.measured_fraction * static_cast<double>(list.size()) + 0.5));
        metered[grid] = std::set<std::string>(list.begin(), list.begin() + static_cast<long>(keep));
        n_measured += keep;
        n_unmeasured += list.size() - keep;
    }

    double sq_mlp = 0.0, sq_ols = 0.0;
    std::size_t entries = 0;
    bool identity = true;
    st.series.resize(scenarios.size());
    st.measured.resize(scenarios.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto& sc = scenarios[i];
        const auto& r = st.sim.results[i];
        const auto steps = r.steps();
        const auto cal = static_cast<std::size_t>(std::floor(kCalibrationShare * static_cast<double>(steps)));
        st.calibration_steps = cal;

        std::vector<std::string> unmeasured;
        for (const auto& d : devices_of[sc.grid])
            if (!metered[sc.grid].count(d)) unmeasured.push_back(d);

        const auto monitored = r.device_index(sc.monitored_device);
        st.series[i] = r.device_p[monitored];
        st.measured[i] = metered[sc.grid].count(sc.monitored_device) > 0;
        if (unmeasured.empty() || cal == 0 || cal == steps) continue;
        identity = false;

        Matrix x_train(cal, kEstimatorFeatures), x_test(steps - cal, kEstimatorFeatures);
        Matrix y_train(cal, unmeasured.size()), y_test(steps - cal, unmeasured.size());
        for (std::size_t t = 0; t < steps; ++t) {
            const bool tr = t < cal;
            time_features(r, t, tr ? x_train.row(t) : x_test.row(t - cal));
            for (std::size_t k = 0; k < unmeasured.size(); ++k)
                (tr ? y_train(t, k) : y_test(t - cal, k)) = r.device_p[r.device_index(unmeasured[k])][t];
        }
        MlpConfig mlp;
        mlp.epochs = 20;
        mlp.seed = derive_seed(master(c), "estimator:" + sc.id);
        const auto est = estimate_loads(x_train, y_train, x_test, y_test, mlp);
        const auto n = static_cast<double>(y_test.rows() * y_test.cols());
        sq_mlp += est.rmse_mlp * est.rmse_mlp * n;
        sq_ols += est.rmse_ols * est.rmse_ols * n;
        entries += y_test.rows() * y_test.cols();

        if (!st.measured[i]) {
            const auto k = static_cast<std::size_t>(
                std::find(unmeasured.begin(), unmeasured.end(), sc.monitored_device) - unmeasured.begin());
            for (std::size_t t = cal; t < steps; ++t) st.series[i][t] = est.mlp_predicted(t - cal, k);
        }
    }
    const double rm = entries ? std::sqrt(sq_mlp / static_cast<double>(entries)) : 0.0;
    const double ro = entries ? std::sqrt(sq_ols / static_cast<double>(entries)) : 0.0;
    stage.metrics = {{"identity", identity},
                     {"rmse_mlp", rm},
                     {"rmse_ols", ro},
                     {"scenarios", scenarios.size()},
                     {"measured_devices", n_measured},
                     {"unmeasured_devices", n_unmeasured},
                     {"calibration_steps", st.calibration_steps}};
    return stage;
}

StageReport app_mining(const ExperimentConfig& c, AppState& st) {
    StageReport stage;
    stage.stage = "mining";
    const auto len = static_cast<std::size_t>(c.dataset.sample_length);
    std::size_t estimated_values = 0, test_values = 0, covered = 0;
    for (std::size_t i = 0; i < st.sim.scenarios.size(); ++i) {
        const auto& sc = st.sim.scenarios[i];
        const auto& s = st.series[i];
        bool any_test = false;
        for (std::size_t start = 0; start + len <= s.size(); start += len) {
            Sample sample;
            sample.values.assign(s.begin() + static_cast<long>(start), s.begin() + static_cast<long>(start + len));
            sample.label = sc.label();
            sample.provenance = {sc.id, sc.grid, sc.monitored_device, start};
            if (start + len <= st.calibration_steps) {
                st.train.samples.push_back(std::move(sample));
            } else {
                any_test = true;
                test_values += len;
                if (!st.measured[i])
                    estimated_values += start + len - std::max(start, st.calibration_steps);
                st.test.samples.push_back(std::move(sample));
            }
        }
        covered += any_test ? 1 : 0;
    }
    for (auto* d : {&st.train, &st.test}) {
        d->meta.name = c.learning.dataset;
        d->meta.sample_length = len;
        d->meta.number_of_samples = d->size();
        d->meta.device_kind = c.learning.type;
    }
    if (st.train.size() == 0 || st.test.size() == 0)
        throw ValidationError("sample_length " + std::to_string(len) +
                              " leaves no complete calibration or operation window");
    stage.metrics = {{"train_windows", st.train.size()},
                     {"test_windows", st.test.size()},
                     {"device_coverage", static_cast<double>(covered) / static_cast<double>(st.sim.scenarios.size())},
                     {"estimated_fraction",
                      test_values ? static_cast<double>(estimated_values) / static_cast<double>(test_values) : 0.0}};
    return stage;
}

StageReport app_detection(const ExperimentConfig& c, AppState& st) {
    StageReport stage;
    stage.stage = "detection";
    const auto result = detect_windows(st.train, st.test, c, derive_seed(master(c), "app-model"));
    stage.scores = result.devices;
    stage.metrics = {{"window_scores", result.windows}, {"device_scores", result.devices}};
    return stage;
}

}  // namespace

PipelineReport run_detection_application(const ExperimentConfig& c) {
    PipelineReport report;
    AppState state;
    using StageFn = StageReport (*)(const ExperimentConfig&, AppState&);
    const std::pair<const char*, StageFn> stages[] = {
        {"estimation", app_estimation}, {"mining", app_mining}, {"detection", app_detection}};
    for (const auto& [name, fn] : stages) {
        try {
            report.stages.push_back(fn(c, state));
        } catch (const std::exception& e) {
            StageReport failed;
            failed.stage = name;
            failed.ok = false;
            failed.error = e.what();
            report.stages.push_back(std::move(failed));
            break;
        }
    }

    const auto folder = results_dir(c, "app");
    const auto report_path = path_in(folder, "pipeline_report.json");
    report.artifacts.push_back(report_path);
    if (const auto* det = report.stage("detection"); det && det->scores)
        append(report.artifacts, emit_score_report(folder, "detection", "app", *det->scores));
    if (const auto* est = report.stage("estimation"); est && est->ok && !est->metrics.empty())
        append(report.artifacts, emit_bar_chart(folder, "estimation_rmse", "estimation RMSE (pu)",
                                                {{"MLP", est->metrics.value("rmse_mlp", 0.0)},
                                                 {"OLS", est->metrics.value("rmse_ols", 0.0)}}));
    json j = report;
    write_text(report_path, j.dump(2) + "\n");
    return report;
}

// ---------------------------------------------------------------- grid search and plots

GridSearchResult run_gridsearch(const ExperimentConfig& c) {
    const auto& spec = c.learning.grid_search;
    GridSearchResult result;
    if (spec.parameter == "calibration_rate") {
        const auto data = prepare_transformer_data(c);
        result = grid_search(spec, [&](double v) { return transformer_detect(data, c, v).report; });
    } else if (spec.parameter == "learning_rate" || spec.parameter == "number_of_epochs" ||
               spec.parameter == "mini_batch_size" || spec.parameter == "knn_k") {
        const auto prefix = dataset_prefix(c);
        if (!fs::exists(prefix + ".manifest.json"))
            throw ValidationError("missing dataset " + prefix + ".manifest.json; run generate first");
        const auto data = load_dataset(prefix);
        const auto split = train_test_split(data.labels(), c.learning.train_test_split, derive_seed(master(c), "split"));
        const auto train = data.subset(split.train);
        const auto test = data.subset(split.test);
        result = grid_search(spec, [&](double v) {
            auto cv = c;
            if (spec.parameter == "learning_rate") cv.learning.learning_rate = v;
            else if (spec.parameter == "number_of_epochs") cv.learning.number_of_epochs = static_cast<int>(v);
            else if (spec.parameter == "mini_batch_size") cv.learning.mini_batch_size = static_cast<int>(v);
            else cv.learning.knn_k = static_cast<int>(v);
            cv.validate();
            return detect_windows(train, test, cv, derive_seed(master(c), "model")).windows;
        });
    } else {
        throw ValidationError("grid search over '" + spec.parameter +
                              "' is not supported (calibration_rate, learning_rate, number_of_epochs, "
                              "mini_batch_size, knn_k)");
    }
    emit_grid_search(results_dir(c, "gridsearch"), "gridsearch", spec, result);
    return result;
}

std::vector<std::string> run_plot(const ExperimentConfig& c) {
    std::vector<std::string> out;
    const auto folder = results_dir(c, "plots");
    const auto prefix = dataset_prefix(c);
    if (fs::exists(prefix + ".manifest.json")) append(out, emit_sample_plot(c, load_dataset(prefix), folder));

    const auto table = path_in(results_dir(c, "gridsearch"), "gridsearch.csv");
    if (fs::exists(table)) {
        std::ifstream in(table);
        std::string line;
        std::getline(in, line);
        std::vector<Bar> bars;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
            if (cells.size() != 5) throw ValidationError(table + ": malformed row '" + line + "'");
            bars.push_back({cells[0], std::stod(cells[4])});
        }
        append(out, emit_bar_chart(folder, "gridsearch_f1", "macro F1 over " + c.learning.grid_search.parameter, bars));
    }
    return out;
}

void write_run_info(const ExperimentConfig& c, const std::string& command, const std::string& started,
                    const std::string& finished) {
    json j{{"command", command},
           {"started", started},
           {"finished", finished},
           {"master_seed", c.simulation.master_seed},
           {"workers", c.workers()}};
    write_text(path_in(c.results_path(), "run_info.json"), j.dump(2) + "\n");
}

}  // namespace gridguard
