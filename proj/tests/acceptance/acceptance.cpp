// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "fixtures.hpp"
#include "gridguard/analysis.hpp"
#include "gridguard/config.hpp"
#include "gridguard/datagen.hpp"
#include "gridguard/evaluation.hpp"
#include "gridguard/pipeline.hpp"
#include "gridguard/powerflow.hpp"
#include "gridguard/recurrent.hpp"
#include "gridguard/regression.hpp"
#include "gridguard/rng.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

using namespace gridguard;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

Outcome attempt(const std::function<Outcome()>& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        return {false, std::string("exception: ") + e.what()};
    }
}

void report(int number, const std::string& title, const Outcome& out) {
    if (!out.pass) ++failures;
    std::printf("%s criterion %d: %s (%s)\n", out.pass ? "PASS" : "FAIL", number, title.c_str(), out.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

Outcome solver_equivalence() {
    const auto start = Clock::now();
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(2 + rng.below(19));
        const auto g = random_radial_feeder(n, derive_seed(7, static_cast<std::uint64_t>(trial)));
        std::map<std::string, Complex> loads;
        std::vector<Injection> injections;
        for (const auto& id : g.pq_bus_ids()) {
            loads[id] = {rng.uniform(0.0, 0.2), rng.uniform(0.0, 0.1)};
            injections.push_back({id, loads[id]});
        }
        const auto bfs = solve_snapshot(g, injections);
        const auto nr = oracle::newton_raphson(g, loads);
        if (!bfs.converged || !nr.converged) return {false, fmt("trial %d did not converge", trial)};
        for (std::size_t i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(std::abs(bfs.voltages[i]) - std::abs(nr.voltages[i])));
    }
    const auto two = solve_snapshot(fixture::two_bus(0.01, 0.01), std::vector<Injection>{{"b1", {0.1, 0.0}}});
    const double v2 = std::abs(two.voltages[1]);
    const double analytic = oracle::two_bus_voltage({0.01, 0.01}, {0.1, 0.0});
    const double elapsed = seconds_since(start);
    const bool pass = worst < 1e-6 && std::abs(v2 - analytic) < 1e-5 && std::abs(v2 - 0.99900) < 1e-5 && elapsed < 10.0;
    return {pass, fmt("max |dV| vs NR %.2e, two-bus |V2| %.6f vs %.6f, %.2f s", worst, v2, analytic, elapsed)};
}

Outcome config_fidelity() {
    const auto c = parse_config("");
    const auto& l = c.learning;
    const auto& s = c.simulation;
    const double lr1 = lr_schedule(1, l.number_of_epochs, l.learning_rate, l.percent_of_epochs_for_warm_up / 100.0);
    const double lr2 = lr_schedule(2, l.number_of_epochs, l.learning_rate, l.percent_of_epochs_for_warm_up / 100.0);
    const auto settings = datagen_settings(c);
    auto one_grid = fixture::feeders();
    one_grid.resize(1);
    const auto scenarios = build_scenarios(settings, one_grid);
    const bool inverted = !scenarios.empty() && scenarios[1].variant == Variant::Inverted;
    std::vector<std::string> bad;
    auto want = [&](bool ok, const char* what) {
        if (!ok) bad.push_back(what);
    };
    want(s.step_size == 15, "step");
    want(1440 / s.step_size == 96, "points/day");
    want(c.dataset.sample_length == 672, "sample_length");
    want(c.dataset.number_of_samples == 200000, "number_of_samples");
    want(s.percentage.at("EV") == 25.0, "EV share");
    want(l.number_of_epochs == 20, "epochs");
    want(l.learning_rate == 1e-6, "lr");
    want(l.mini_batch_size == 60, "batch");
    want(l.percent_of_epochs_for_warm_up == 10.0, "warm-up");
    want(std::abs(lr1 - 5e-7) < 1e-18 && std::abs(lr2 - 1e-6) < 1e-18, "lr schedule");
    want(l.k_folds == 5, "k");
    want(l.train_test_split == 0.3, "split");
    want(s.broken_control_curve_choice == 2 && inverted, "choice 2 = inverted");
    want(c == ExperimentConfig{}, "defaults equal");
    std::string detail = fmt("lr(1)=%.3g lr(2)=%.3g", lr1, lr2);
    for (const auto& b : bad) detail += ", mismatch: " + b;
    return {bad.empty(), detail};
}

struct Separation {
    double low_fraction = 0.0;
    double oracle_accuracy = 0.0;
    std::size_t windows = 0;
    double f1 = 0.0;
};

Separation separation(int choice) {
    DatagenSettings s;
    s.malfunction_choice = choice;
    s.sim_days = 365;
    s.step_minutes = 15;
    s.master_seed = 2;
    const auto data = generate_device_data(s, fixture::feeders(), 672, Channel::P, 4);

    Separation out;
    std::size_t low = 0;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
    for (const auto& r : data.raw) {
        low += r.v_pu < 0.95;
        series[r.scenario_id].first.push_back(r.p_pu);
        series[r.scenario_id].second.push_back(r.v_pu);
    }
    out.low_fraction = static_cast<double>(low) / static_cast<double>(data.raw.size());

    std::map<std::string, int> label_of;
    for (const auto& sc : data.scenarios) label_of[sc.id] = sc.label();
    std::size_t agree = 0;
    for (const auto& [id, pv] : series)
        for (std::size_t start = 0; start + 672 <= pv.first.size(); start += 672) {
            const std::vector<double> p(pv.first.begin() + long(start), pv.first.begin() + long(start + 672));
            const std::vector<double> v(pv.second.begin() + long(start), pv.second.begin() + long(start + 672));
            agree += (oracle::active_correlation(p, v) < 0.0 ? 1 : 0) == label_of.at(id);
            ++out.windows;
        }
    out.oracle_accuracy = static_cast<double>(agree) / static_cast<double>(out.windows);

    std::size_t per_class[2] = {0, 0};
    for (const auto& smp : data.samples) ++per_class[smp.label];
    const auto ds = assemble_dataset(data.samples, 2 * std::min(per_class[0], per_class[1]), 3);
    const auto split = train_test_split(ds.labels(), 0.3, 4);
    ExperimentConfig c;
    c.learning.classifier = "logistic";
    c.simulation.parallel_computing = false;
    out.f1 = detect_windows(ds.subset(split.train), ds.subset(split.test), c, 5).windows.f1_macro;
    return out;
}

Outcome detectability() {
    const auto start = Clock::now();
    const auto inverted = separation(2);
    const auto flat = separation(1);
    const double elapsed = seconds_since(start);
    const bool pass = inverted.low_fraction >= 0.10 && inverted.oracle_accuracy >= 0.95 && inverted.windows >= 200 &&
                      inverted.f1 >= 0.90 && flat.f1 >= 0.85 && elapsed < 120.0;
    return {pass, fmt("steps below 0.95 pu %.3f, corr-sign oracle %.3f over %zu windows, logistic F1 inverted %.3f, "
                      "flat %.3f, %.1f s",
                      inverted.low_fraction, inverted.oracle_accuracy, inverted.windows, inverted.f1, flat.f1,
                      elapsed)};
}

Outcome gradient_correctness() {
    Rng rng(17);
    double worst = 0.0;
    int checked = 0;
    for (int trial = 0; checked < 50; ++trial) {
        const auto act = trial % 2 == 0 ? Activation::Tanh : Activation::Relu;
        const auto m = RecurrentModel::random(1 + rng.below(4), 1 + rng.below(3), act, 5000 + trial);
        std::vector<double> x(1 + rng.below(10));
        for (auto& v : x) v = rng.normal();
        if (act == Activation::Relu && min_abs_preactivation(m, x) < 1e-3) continue;
        worst = std::max(worst, gradient_check(m, x, trial % 2));
        ++checked;
    }
    return {worst < 1e-4, fmt("max relative error %.2e over %d models", worst, checked)};
}

Outcome pca_and_clustering() {
    Rng rng(12);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto d = 2 + rng.below(3);
        Matrix x(12, d);
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal() * static_cast<double>(j + 1);
        const auto m = pca_fit(x, d);
        Matrix cov(d, d);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
                for (std::size_t i = 0; i < x.rows(); ++i)
                    cov(a, b) += (x(i, a) - m.mean[a]) * (x(i, b) - m.mean[b]);
                cov(a, b) /= static_cast<double>(x.rows() - 1);
            }
        const auto roots = oracle::eigenvalues_by_polynomial(cov);
        for (std::size_t k = 0; k < d; ++k) worst = std::max(worst, std::abs(roots[k] - m.eigenvalues[k]));
    }
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(5);
        Matrix x(n, 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                x(i, j) = trial % 2 == 0 ? static_cast<double>(rng.below(4)) : rng.normal();
        for (const auto linkage : {Linkage::Single, Linkage::Complete, Linkage::Average}) {
            const auto a = hierarchical_cluster(x, linkage);
            const auto b = oracle::brute_force_cluster(x, linkage);
            bool same = a.merges.size() == b.merges.size();
            for (std::size_t s = 0; same && s < a.merges.size(); ++s)
                same = a.merges[s].a == b.merges[s].a && a.merges[s].b == b.merges[s].b &&
                       std::abs(a.merges[s].distance - b.merges[s].distance) <= 1e-12;
            mismatches += same ? 0 : 1;
        }
    }
    return {worst < 1e-8 && mismatches == 0,
            fmt("max eigenvalue gap %.2e, clustering mismatches %d/300", worst, mismatches)};
}

Outcome metric_arithmetic() {
    ConfusionMatrix m;
    m.counts = {{{2, 1}, {1, 2}}};
    const auto s = scores(m);
    const double t = 2.0 / 3.0;
    const double gap = std::max({std::abs(s.accuracy - t), std::abs(s.precision_macro - t),
                                 std::abs(s.recall_macro - t), std::abs(s.f1_macro - t)});
    return {gap < 1e-12, fmt("max deviation from 2/3: %.2e", gap)};
}

Outcome determinism() {
    std::string container, manifest, raw;
    std::vector<std::string> runs;
    int differing = 0;
    int index = 0;
    for (int workers : {1, 1, 4, 12}) {
        auto c = fixture::desk_config(fixture::temp_dir("acceptance_det_" + std::to_string(index++)));
        c.simulation.parallel_computing = workers > 1;
        c.simulation.cores = workers;
        run_generate(c);
        const auto f = fixture::read_file(dataset_prefix(c) + ".f64");
        const auto m = fixture::read_file(dataset_prefix(c) + ".manifest.json");
        const auto r = fixture::read_file(raw_csv_path(c));
        if (container.empty()) {
            container = f;
            manifest = m;
            raw = r;
        } else if (f != container || m != manifest || r != raw) {
            ++differing;
        }
        runs.push_back(std::to_string(workers));
    }
    return {differing == 0 && !container.empty(),
            fmt("runs with workers 1,1,4,12: %d differ; container %zu bytes, raw csv %zu bytes", differing,
                container.size(), raw.size())};
}

Outcome estimation_benchmark() {
    Matrix x(200, 2), y(200, 1);
    for (std::size_t i = 0; i < 200; ++i) {
        x(i, 0) = -1.0 + 2.0 * static_cast<double>(i % 20) / 19.0;
        x(i, 1) = -1.0 + 2.0 * static_cast<double>(i / 20) / 9.0;
        y(i, 0) = 0.5 * x(i, 0) - 0.25 * x(i, 1) + 0.1;
    }
    MlpConfig mlp;
    mlp.seed = 3;
    const auto linear = estimate_loads(x, y, x, y, mlp);
    for (std::size_t i = 0; i < 200; ++i) y(i, 0) = x(i, 0) * x(i, 0);
    const auto quadratic = estimate_loads(x, y, x, y, mlp);

    PipelineReport fixture_report;
    fixture_report.stages.push_back(estimation_stage(quadratic));
    const nlohmann::json j = fixture_report;
    const auto& metrics = j["stages"][0]["metrics"];
    const bool in_fixture_report = metrics.contains("rmse_mlp") && metrics.contains("rmse_ols") &&
                                   metrics["rmse_mlp"].get<double>() == quadratic.rmse_mlp &&
                                   metrics["rmse_ols"].get<double>() == quadratic.rmse_ols;

    const auto app = run_detection_application(fixture::desk_config(fixture::temp_dir("acceptance_app")));
    const auto* est = app.stage("estimation");
    const bool in_app_report = est && est->ok && est->metrics.contains("rmse_mlp") && est->metrics.contains("rmse_ols");

    const bool pass = linear.rmse_ols < 1e-6 && quadratic.rmse_mlp < quadratic.rmse_ols && in_fixture_report && in_app_report;
    return {pass, fmt("linear OLS RMSE %.2e; quadratic MLP %.4f vs OLS %.4f; reported: fixture %s, app %s",
                      linear.rmse_ols, quadratic.rmse_mlp, quadratic.rmse_ols, in_fixture_report ? "yes" : "no",
                      in_app_report ? "yes" : "no")};
}

// Runs in a child process so peak memory is measured for this work alone.
Outcome scale_smoke() {
    constexpr std::size_t rows = 20000, length = 672;
    const auto dir = fixture::temp_dir("acceptance_scale");
    int pipe_fd[2];
    if (pipe(pipe_fd) != 0) return {false, "pipe failed"};
    const pid_t pid = fork();
    if (pid == 0) {
        close(pipe_fd[0]);
        const auto start = Clock::now();
        int ok = 0;
        {
            std::vector<Sample> samples(rows);
            Rng rng(9);
            for (std::size_t i = 0; i < rows; ++i) {
                samples[i].values.resize(length);
                for (auto& v : samples[i].values) v = rng.normal();
                samples[i].label = static_cast<int>(i % 2);
                samples[i].provenance = {"s" + std::to_string(i / 52), "g", "d", (i % 52) * length};
            }
            auto ds = assemble_dataset(samples, rows, 1);
            samples.clear();
            samples.shrink_to_fit();
            ds.meta.sample_length = length;
            save_dataset(ds, dir + "/scale");
            ok = load_dataset(dir + "/scale") == ds ? 1 : 0;
        }
        const double elapsed = seconds_since(start);
        const auto written = write(pipe_fd[1], &elapsed, sizeof elapsed);
        (void)written;
        _exit(ok ? 0 : 3);
    }
    close(pipe_fd[1]);
    double elapsed = -1.0;
    const auto got = read(pipe_fd[0], &elapsed, sizeof elapsed);
    close(pipe_fd[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    rusage usage{};
    getrusage(RUSAGE_CHILDREN, &usage);
    const double peak_mb = static_cast<double>(usage.ru_maxrss) / 1024.0;
    const bool round_trip = WIFEXITED(status) && WEXITSTATUS(status) == 0 && got == sizeof elapsed;
    // the paper-scale container is only checked by size arithmetic
    const std::uint64_t paper_bytes = std::uint64_t{200000} * 672 * 8;
    const bool pass = round_trip && elapsed < 60.0 && peak_mb < 2048.0 && paper_bytes == 1075200000ULL;
    return {pass, fmt("%zux%zu round trip %s in %.2f s, peak RSS %.0f MB; 200000x672 block = %llu bytes", rows, length,
                      round_trip ? "exact" : "FAILED", elapsed, peak_mb,
                      static_cast<unsigned long long>(paper_bytes))};
}

}  // namespace

int main() {
    // forked before anything else so the child's peak memory is its own
    const auto scale = attempt(scale_smoke);
    report(1, "solver equivalence", attempt(solver_equivalence));
    report(2, "config fidelity", attempt(config_fidelity));
    report(3, "detectability", attempt(detectability));
    report(4, "gradient correctness", attempt(gradient_correctness));
    report(5, "PCA and clustering oracles", attempt(pca_and_clustering));
    report(6, "metric arithmetic", attempt(metric_arithmetic));
    report(7, "determinism", attempt(determinism));
    report(8, "load-estimation benchmark", attempt(estimation_benchmark));
    report(9, "scale smoke test", scale);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
