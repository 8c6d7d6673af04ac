// gridguard command-line front end.

#include "gridguard/error.hpp"
#include "gridguard/pipeline.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <ctime>
#include <iostream>
#include <optional>

using namespace gridguard;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void print_scores(const std::string& what, const ScoreReport& r) {
    std::printf("%-28s accuracy %.4f  precision %.4f  recall %.4f  f1 %.4f\n", what.c_str(), r.accuracy,
                r.precision_macro, r.recall_macro, r.f1_macro);
}

int run(const std::string& command, ExperimentConfig config) {
    const auto started = utc_now();
    int status = 0;
    if (command == "generate") {
        const auto out = run_generate(config);
        if (out.skipped)
            std::printf("raw_data_available = true: loaded %zu windows from %s\n", out.dataset.size(),
                        dataset_prefix(config).c_str());
        else
            std::printf("%zu scenarios, %zu windows available, %zu assembled -> %s\n", out.scenarios,
                        out.windows_available, out.dataset.size(), dataset_prefix(config).c_str());
    } else if (command == "train" || command == "eval") {
        if (command == "eval") config.learning.mode = "eval";
        if (config.learning.mode == "train") run_generate(config);
        const auto out = run_device_detection(config);
        for (std::size_t f = 0; f < out.folds.size(); ++f) print_scores("fold " + std::to_string(f + 1), out.folds[f]);
        print_scores("test windows", out.test.windows);
        print_scores("test devices (majority vote)", out.test.devices);
    } else if (command == "transformer-detect") {
        const auto out = run_transformer_detection(config);
        std::printf("PCA kept %zu components (%.4f of variance); %zu simulation + %zu calibration windows\n",
                    out.components, out.retained_variance, out.simulation_windows, out.calibration_windows);
        print_scores("target-grid test windows", out.report);
    } else if (command == "app") {
        const auto out = run_detection_application(config);
        for (const auto& s : out.stages) {
            std::printf("[%s] %s %s\n", s.ok ? "ok" : "failed", s.stage.c_str(),
                        s.ok ? s.metrics.dump().c_str() : s.error.c_str());
        }
        if (!out.ok()) status = 2;
    } else if (command == "gridsearch") {
        const auto out = run_gridsearch(config);
        for (const auto& row : out.rows) {
            char label[48];
            std::snprintf(label, sizeof label, "%s=%g", config.learning.grid_search.parameter.c_str(), row.value);
            if (row.report) print_scores(label, *row.report);
            else std::printf("%-28s failed: %s\n", label, row.error.c_str());
        }
        if (const auto best = out.best_value()) std::printf("best %s = %g\n", config.learning.grid_search.parameter.c_str(), *best);
    } else if (command == "plot") {
        for (const auto& p : run_plot(config)) std::printf("%s\n", p.c_str());
    }
    write_run_info(config, command, started, utc_now());
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Malfunction detection testbed for distribution grids"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    app.add_option("--config", config_path, "Experiment config (TOML)")->required()->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed override");
    app.add_option("--workers", workers, "Worker threads (enables parallel simulation when > 1)")
        ->check(CLI::PositiveNumber);

    const char* commands[][2] = {
        {"generate", "Simulate scenarios and write the raw CSV and dataset container"},
        {"train", "Train and score the configured classifier on the device-level dataset"},
        {"eval", "Score a saved model on the held-out split"},
        {"transformer-detect", "Detection from substation measurements only"},
        {"app", "Load estimation, window mining and detection"},
        {"gridsearch", "Sweep the configured grid-search parameter"},
        {"plot", "Re-emit sample and grid-search plots"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const auto command = app.get_subcommands().front()->get_name();
    try {
        auto config = load_config(config_path);
        if (seed) config.simulation.master_seed = *seed;
        if (workers) {
            config.simulation.cores = *workers;
            config.simulation.parallel_computing = *workers > 1;
        }
        config.validate();
        return run(command, std::move(config));
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
}
