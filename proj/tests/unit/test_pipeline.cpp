#include "doctest.h"

#include "fixtures.hpp"
#include "gridguard/error.hpp"
#include "gridguard/pipeline.hpp"

#include <filesystem>

using namespace gridguard;
namespace fs = std::filesystem;

namespace {

// One generated desk dataset shared by the cases that only read it.
const ExperimentConfig& generated_desk() {
    static const ExperimentConfig config = [] {
        auto c = fixture::desk_config(fixture::temp_dir("pipeline_shared"));
        run_generate(c);
        return c;
    }();
    return config;
}

}  // namespace

TEST_CASE("generate writes a balanced dataset and the raw table") {
    const auto c = fixture::desk_config(fixture::temp_dir("pipeline_generate"));
    const auto out = run_generate(c);
    CHECK_FALSE(out.skipped);
    CHECK(out.scenarios == 20);
    CHECK(out.windows_available == 20 * 14);
    CHECK(out.dataset.size() == 280);
    CHECK(out.dataset.class_counts()[0] == out.dataset.class_counts()[1]);
    CHECK(fs::exists(raw_csv_path(c)));
    CHECK(fs::exists(dataset_prefix(c) + ".manifest.json"));
    CHECK(load_raw(raw_csv_path(c)).size() == 20 * 14 * 96);

    auto reuse = c;
    reuse.dataset.raw_data_available = true;
    const auto again = run_generate(reuse);
    CHECK(again.skipped);
    CHECK(again.dataset == out.dataset);

    auto capped = c;
    capped.dataset.number_of_samples = 40;
    CHECK(run_generate(capped).dataset.size() == 40);
}

TEST_CASE("raw data flagged available but missing is an error") {
    auto c = fixture::desk_config(fixture::temp_dir("pipeline_missing"));
    c.dataset.raw_data_available = true;
    CHECK_THROWS_AS(run_generate(c), ValidationError);
    CHECK_THROWS_AS(prepare_transformer_data(c), ValidationError);
}

TEST_CASE("grid folder handling") {
    auto c = fixture::desk_config(fixture::temp_dir("pipeline_grids"));
    CHECK(load_grids(c).size() == 2);
    c.dataset.number_of_grids = 1;
    REQUIRE(load_grids(c).size() == 1);
    CHECK(load_grids(c)[0].name == "feeder_a");
    c.paths.grid_data_folder = "nowhere";
    CHECK_THROWS_AS(load_grids(c), ValidationError);
}

TEST_CASE("generation is byte-identical across worker counts") {
    std::string first_container, first_raw;
    for (int workers : {1, 4}) {
        auto c = fixture::desk_config(fixture::temp_dir("pipeline_workers_" + std::to_string(workers)));
        c.simulation.parallel_computing = workers > 1;
        c.simulation.cores = workers;
        run_generate(c);
        const auto container = fixture::read_file(dataset_prefix(c) + ".f64");
        const auto raw = fixture::read_file(raw_csv_path(c));
        if (first_container.empty()) {
            first_container = container;
            first_raw = raw;
        } else {
            CHECK(container == first_container);
            CHECK(raw == first_raw);
        }
    }
}

TEST_CASE("train then eval on the saved model") {
    auto c = generated_desk();
    const auto trained = run_device_detection(c);
    CHECK(trained.test.windows.f1_macro >= 0.8);
    CHECK(trained.test.devices.matrix.total() <= 20);
    CHECK(trained.folds.empty());
    CHECK(fs::exists(model_prefix(c) + ".manifest.json"));
    CHECK(fs::exists(c.results_path() + "/device_detection/windows.json"));
    CHECK(fs::exists(c.results_path() + "/device_detection/samples.svg"));

    c.learning.mode = "eval";
    const auto evaluated = run_device_detection(c);
    CHECK(evaluated.test.windows.matrix == trained.test.windows.matrix);
    CHECK(evaluated.test.devices.matrix == trained.test.devices.matrix);

    c.learning.classifier = "knn";
    CHECK_THROWS_AS(run_device_detection(c), ValidationError);
}

TEST_CASE("cross validation and the other classifiers") {
    auto c = generated_desk();
    c.learning.k_folds = 3;
    c.learning.save_model = false;
    c.learning.plot_samples = false;
    c.paths.results_folder = "results_cv";
    const auto out = run_device_detection(c);
    CHECK(out.folds.size() == 3);
    CHECK(fs::exists(c.results_path() + "/device_detection/folds.csv"));
    CHECK_FALSE(fs::exists(c.results_path() + "/device_detection/samples.svg"));

    c.learning.k_folds = 1;
    c.learning.classifier = "knn";
    CHECK(run_device_detection(c).test.windows.f1_macro >= 0.7);

    c.learning.classifier = "RNN";
    c.learning.rnn_model_settings = {1, 4, 1, 5};
    c.learning.number_of_epochs = 3;
    c.learning.learning_rate = 0.01;
    const auto rnn = run_device_detection(c);
    CHECK(rnn.test.windows.matrix.total() > 0);
}

TEST_CASE("saved models predict like the fitted ones") {
    const auto& c = generated_desk();
    const auto data = load_dataset(dataset_prefix(c));
    for (const char* classifier : {"logistic", "knn", "RNN"}) {
        auto cc = c;
        cc.learning.classifier = classifier;
        cc.learning.rnn_model_settings = {1, 3, 2, 5};
        cc.learning.number_of_epochs = 2;
        cc.learning.learning_rate = 0.01;
        const auto model = fit_model(data, cc, 5);
        const auto prefix = fixture::temp_dir(std::string("pipeline_model_") + classifier) + "/m";
        save_model(model, prefix);
        CHECK(predict_windows(load_model(prefix), data) == predict_windows(model, data));
    }
}

TEST_CASE("transformer-level detection") {
    const auto c = generated_desk();
    const auto data = prepare_transformer_data(c);
    CHECK(data.target_grid == "feeder_b");
    CHECK(data.features.cols() == 20);
    CHECK(data.labels.size() == data.features.rows());

    const auto none = transformer_detect(data, c, 0.0);
    CHECK(none.calibration_windows == 0);
    CHECK(none.retained_variance >= 0.95);
    CHECK(none.dendrogram.merges.size() + 1 == none.dendrogram_sources.size());

    const auto all = transformer_detect(data, c, 1.0);
    CHECK(all.calibration_windows > 0);
    CHECK(all.test_windows == none.test_windows);
    CHECK(all.simulation_windows == none.simulation_windows);
    CHECK_THROWS_AS(transformer_detect(data, c, 1.5), ValidationError);

    const auto run = run_transformer_detection(c);
    CHECK(fs::exists(c.results_path() + "/transformer_detection/dendrogram.csv"));
    CHECK(run.report.matrix.total() == none.test_windows);
}

TEST_CASE("grid search over calibration rates") {
    auto c = generated_desk();
    c.learning.grid_search = {"calibration_rate", {0.0, 0.5, 1.0}};
    const auto result = run_gridsearch(c);
    CHECK(result.rows.size() == 3);
    CHECK(result.best.has_value());
    CHECK(fs::exists(c.results_path() + "/gridsearch/gridsearch.csv"));
    const auto plots = run_plot(c);
    CHECK(fs::exists(c.results_path() + "/plots/gridsearch_f1.svg"));

    c.learning.grid_search = {"knn_k", {1, 3}};
    c.learning.classifier = "knn";
    CHECK(run_gridsearch(c).rows.size() == 2);
    c.learning.grid_search = {"dropout", {0.1}};
    CHECK_THROWS_AS(run_gridsearch(c), ValidationError);
}

TEST_CASE("detection application") {
    auto c = fixture::desk_config(fixture::temp_dir("pipeline_app"));
    const auto report = run_detection_application(c);
    REQUIRE(report.stages.size() == 3);
    CHECK(report.ok());
    const auto* est = report.stage("estimation");
    REQUIRE(est != nullptr);
    CHECK(est->metrics["rmse_mlp"].get<double>() > 0.0);
    CHECK(est->metrics["rmse_ols"].get<double>() > 0.0);
    CHECK_FALSE(est->metrics["identity"].get<bool>());
    REQUIRE(report.stage("detection")->scores.has_value());
    CHECK(fs::exists(c.results_path() + "/app/pipeline_report.json"));

    SUBCASE("every device metered") {
        c.learning.measured_fraction = 1.0;
        c.paths.results_folder = "results_full";
        const auto full = run_detection_application(c);
        CHECK(full.ok());
        CHECK(full.stage("estimation")->metrics["identity"].get<bool>());
        CHECK(full.stage("mining")->metrics["estimated_fraction"].get<double>() == 0.0);
    }
    SUBCASE("a failing stage ends the run") {
        c.dataset.sample_length = 96 * 14;
        c.paths.results_folder = "results_fail";
        const auto failed = run_detection_application(c);
        CHECK_FALSE(failed.ok());
        CHECK(failed.stages.size() == 2);
        CHECK_FALSE(failed.stage("mining")->ok);
        CHECK(fs::exists(c.results_path() + "/app/pipeline_report.json"));
    }
}

TEST_CASE("estimation benchmark on fixtures") {
    Matrix x(200, 2), y(200, 1);
    for (std::size_t i = 0; i < 200; ++i) {
        x(i, 0) = -1.0 + 2.0 * static_cast<double>(i % 20) / 19.0;
        x(i, 1) = -1.0 + 2.0 * static_cast<double>(i / 20) / 9.0;
        y(i, 0) = 0.5 * x(i, 0) - 0.25 * x(i, 1) + 0.1;
    }
    MlpConfig mlp;
    mlp.seed = 3;
    const auto linear = estimate_loads(x, y, x, y, mlp);
    CHECK(linear.rmse_ols < 1e-6);
    CHECK(std::isfinite(linear.rmse_mlp));

    for (std::size_t i = 0; i < 200; ++i) y(i, 0) = x(i, 0) * x(i, 0);
    const auto quadratic = estimate_loads(x, y, x, y, mlp);
    CHECK(quadratic.rmse_mlp < quadratic.rmse_ols);
    const nlohmann::json j = estimation_stage(quadratic);
    CHECK(j["metrics"]["rmse_mlp"].get<double>() == quadratic.rmse_mlp);
    CHECK(j["metrics"]["rmse_ols"].get<double>() == quadratic.rmse_ols);
}

TEST_CASE("run info carries the only timestamps") {
    const auto c = fixture::desk_config(fixture::temp_dir("pipeline_runinfo"));
    write_run_info(c, "generate", "2024-01-01T00:00:00Z", "2024-01-01T00:01:00Z");
    const auto j = nlohmann::json::parse(fixture::read_file(c.results_path() + "/run_info.json"));
    CHECK(j["command"] == "generate");
    CHECK(j["started"] == "2024-01-01T00:00:00Z");
}
