#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gridguard {

/// Equidistant power series in per-unit. Loads are consumption-positive,
/// PV generation-positive; EV/HP/BESS series are availability factors.
struct Profile {
    int step_minutes = 15;
    std::vector<double> values;
    std::string kind;

    std::size_t size() const { return values.size(); }
    bool operator==(const Profile&) const = default;
};

/// Throws ValidationError unless step is one of 1, 5, 15, 60 minutes.
void check_step_minutes(int step_minutes);

/// days * 1440 / step
std::size_t profile_length(int days, int step_minutes);

/// Hour of day (fractional) at the start of step t.
double hour_of_day(std::size_t t, int step_minutes);

/// Noise-free household shape: base load with a morning and an evening peak.
double household_shape(double hour);

/// Noise-free clear-sky PV bell for clearness 1.
double pv_shape(double hour);

Profile synth_household(std::uint64_t seed, int days, int step_minutes, double noise_sigma);
Profile synth_pv(std::uint64_t seed, int days, int step_minutes);

struct EvSession {
    int day = 0;
    int arrival_minute = 0;  ///< minutes after midnight, on the step grid
    int duration_minutes = 0;
};

/// Seeded sessions: one per day, arrival in [17:00, 21:00] and duration in
/// [2 h, 4 h], both snapped to the step grid.
std::vector<EvSession> draw_ev_sessions(std::uint64_t seed, int days, int step_minutes);

/// Availability 1.0 while a session is active, else 0. Sessions running past
/// the last day are truncated.
Profile ev_profile_from_sessions(const std::vector<EvSession>& sessions, int days,
                                 int step_minutes);

Profile synth_ev(std::uint64_t seed, int days, int step_minutes);

/// Constant availability series (placeholder for BESS/HP).
Profile constant_profile(double value, int days, int step_minutes, std::string kind);

/// Reads "# step_minutes=<int>" followed by one value per line, optionally
/// preceded by an ignored timestamp column.
Profile load_profile_csv(const std::string& path);
void save_profile_csv(const Profile& profile, const std::string& path);

}  // namespace gridguard
