#include "gridguard/parallel.hpp"

#include "gridguard/error.hpp"

namespace gridguard {

namespace {

TimeSeriesResult simulate_job(const SimulationJob& job) {
    return simulate_timeseries(job.grid, job.profiles, job.horizon, job.settings);
}

}  // namespace

std::vector<Outcome<TimeSeriesResult>> run_serial(const std::vector<SimulationJob>& jobs) {
    return serial_map<TimeSeriesResult>(jobs.size(),
                                        [&](std::size_t i) { return simulate_job(jobs[i]); });
}

std::vector<Outcome<TimeSeriesResult>> run_parallel(const std::vector<SimulationJob>& jobs,
                                                    int worker_count) {
    if (worker_count < 1) throw ValidationError("worker count must be >= 1");
    return parallel_map<TimeSeriesResult>(jobs.size(), worker_count,
                                          [&](std::size_t i) { return simulate_job(jobs[i]); });
}

}  // namespace gridguard
