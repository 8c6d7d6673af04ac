// Serial reference vs OpenMP runners: scenario simulation and kNN batches.

#include "gridguard/baselines.hpp"
#include "gridguard/datagen.hpp"
#include "gridguard/parallel.hpp"
#include "gridguard/rng.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <omp.h>

using namespace gridguard;

namespace {

template <typename Fn>
double seconds(Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int workers = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
    const int days = argc > 2 ? std::atoi(argv[2]) : 30;

    std::vector<GridModel> grids;
    for (const char* name : {"feeder_a.json", "feeder_b.json"})
        grids.push_back(load_grid_file(std::string(GRIDGUARD_DATA_DIR) + "/grids/" + name));
    DatagenSettings settings;
    settings.sim_days = days;
    const auto scenarios = build_scenarios(settings, grids);
    std::vector<SimulationJob> jobs;
    for (const auto& sc : scenarios) jobs.push_back(materialize(sc, grids[sc.grid_index], settings));

    std::vector<Outcome<TimeSeriesResult>> serial, parallel;
    const double ts = seconds([&] { serial = run_serial(jobs); });
    const double tp = seconds([&] { parallel = run_parallel(jobs, workers); });
    bool same = serial.size() == parallel.size();
    for (std::size_t i = 0; same && i < serial.size(); ++i) same = serial[i].value == parallel[i].value;
    std::printf("scenarios  %3zu jobs x %d days  serial %.3f s  openmp(%d) %.3f s  speedup %.2f  identical %s\n",
                jobs.size(), days, ts, workers, tp, ts / tp, same ? "yes" : "NO");

    Rng rng(7);
    const std::size_t n = 4000, q = 2000, d = 20;
    Matrix train(n, d), queries(q, d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(rng.below(2));
        for (std::size_t c = 0; c < d; ++c) train(i, c) = rng.normal() + labels[i];
    }
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t c = 0; c < d; ++c) queries(i, c) = rng.normal() + 0.5;
    std::vector<int> ks, kp;
    const double ks_t = seconds([&] { ks = knn_predict_batch_serial(train, labels, 5, queries); });
    const double kp_t = seconds([&] { kp = knn_predict_batch(train, labels, 5, queries, workers); });
    std::printf("knn        %zu x %zu queries  serial %.3f s  openmp(%d) %.3f s  speedup %.2f  identical %s\n", q, n,
                ks_t, workers, kp_t, ks_t / kp_t, ks == kp ? "yes" : "NO");
    return same && ks == kp ? 0 : 1;
}
