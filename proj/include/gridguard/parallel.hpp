#pragma once

#include "gridguard/powerflow.hpp"

#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

namespace gridguard {

/// Result slot of one independent task: either a value or the error text.
template <typename T>
struct Outcome {
    std::optional<T> value;
    std::string error;

    bool ok() const { return value.has_value(); }
};

namespace detail {

template <typename T, typename Fn>
void run_task(Fn& task, std::size_t i, Outcome<T>& slot) {
    try {
        slot.value.emplace(task(i));
    } catch (const std::exception& e) {
        slot.error = e.what();
    } catch (...) {
        slot.error = "unknown failure";
    }
}

}  // namespace detail

/// Reference runner: tasks in index order on the calling thread.
template <typename T, typename Fn>
std::vector<Outcome<T>> serial_map(std::size_t count, Fn&& task) {
    std::vector<Outcome<T>> out(count);
    for (std::size_t i = 0; i < count; ++i) detail::run_task<T>(task, i, out[i]);
    return out;
}

/// OpenMP runner. Each task writes only its own slot, so the output is
/// identical to serial_map for any worker count as long as tasks are pure
/// functions of their index.
template <typename T, typename Fn>
std::vector<Outcome<T>> parallel_map(std::size_t count, int workers, Fn&& task) {
    if (workers < 1) workers = 1;
    std::vector<Outcome<T>> out(count);
    const auto n = static_cast<long>(count);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (long i = 0; i < n; ++i)
        detail::run_task<T>(task, static_cast<std::size_t>(i), out[static_cast<std::size_t>(i)]);
    return out;
}

/// Self-contained time-series simulation input.
struct SimulationJob {
    GridModel grid;
    ProfileAssignment profiles;
    Horizon horizon;
    SolverSettings settings;
};

std::vector<Outcome<TimeSeriesResult>> run_serial(const std::vector<SimulationJob>& jobs);

/// Scenario-parallel simulation; results in input order, bitwise identical
/// for any worker_count. A failing job is reported in its slot only.
std::vector<Outcome<TimeSeriesResult>> run_parallel(const std::vector<SimulationJob>& jobs,
                                                    int worker_count);

}  // namespace gridguard
