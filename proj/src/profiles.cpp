#include "gridguard/profiles.hpp"

#include "gridguard/error.hpp"
#include "gridguard/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace gridguard {

void check_step_minutes(int step_minutes) {
    if (step_minutes != 1 && step_minutes != 5 && step_minutes != 15 && step_minutes != 60)
        throw ValidationError("step size must be 1, 5, 15 or 60 minutes, got " +
                              std::to_string(step_minutes));
}

std::size_t profile_length(int days, int step_minutes) {
    check_step_minutes(step_minutes);
    if (days < 1) throw ValidationError("profile horizon must be at least one day");
    return static_cast<std::size_t>(days) * 1440 / static_cast<std::size_t>(step_minutes);
}

double hour_of_day(std::size_t t, int step_minutes) {
    const auto minute = (t * static_cast<std::size_t>(step_minutes)) % 1440;
    return static_cast<double>(minute) / 60.0;
}

double household_shape(double hour) {
    const double morning = (hour - 7.5) / 1.5;
    const double evening = (hour - 19.0) / 2.0;
    return 0.2 + 0.3 * std::exp(-morning * morning) + 0.5 * std::exp(-evening * evening);
}

double pv_shape(double hour) {
    const double s = std::sin(std::numbers::pi * (hour - 6.0) / 12.0);
    return s > 0.0 ? std::pow(s, 1.2) : 0.0;
}

Profile synth_household(std::uint64_t seed, int days, int step_minutes, double noise_sigma) {
    const auto n = profile_length(days, step_minutes);
    Profile p{step_minutes, std::vector<double>(n), "household"};
    Rng rng(seed);
    for (std::size_t t = 0; t < n; ++t) {
        const double noise = noise_sigma * rng.uniform(-1.0, 1.0);
        p.values[t] = std::max(0.0, household_shape(hour_of_day(t, step_minutes)) + noise);
    }
    return p;
}

Profile synth_pv(std::uint64_t seed, int days, int step_minutes) {
    const auto n = profile_length(days, step_minutes);
    const auto per_day = n / static_cast<std::size_t>(days);
    Profile p{step_minutes, std::vector<double>(n), "pv"};
    Rng rng(seed);
    for (int d = 0; d < days; ++d) {
        const double clearness = rng.uniform(0.3, 1.0);
        for (std::size_t k = 0; k < per_day; ++k) {
            const auto t = static_cast<std::size_t>(d) * per_day + k;
            p.values[t] = clearness * pv_shape(hour_of_day(t, step_minutes));
        }
    }
    return p;
}

std::vector<EvSession> draw_ev_sessions(std::uint64_t seed, int days, int step_minutes) {
    check_step_minutes(step_minutes);
    Rng rng(seed);
    std::vector<EvSession> sessions;
    const double step = step_minutes;
    for (int d = 0; d < days; ++d) {
        const double arrival = rng.uniform(17.0 * 60.0, 21.0 * 60.0);
        const double duration = rng.uniform(120.0, 240.0);
        EvSession s;
        s.day = d;
        s.arrival_minute = static_cast<int>(std::lround(arrival / step)) * step_minutes;
        s.duration_minutes =
            std::max(1, static_cast<int>(std::lround(duration / step))) * step_minutes;
        sessions.push_back(s);
    }
    return sessions;
}

Profile ev_profile_from_sessions(const std::vector<EvSession>& sessions, int days,
                                 int step_minutes) {
    const auto n = profile_length(days, step_minutes);
    Profile p{step_minutes, std::vector<double>(n, 0.0), "ev"};
    for (const auto& s : sessions) {
        const long start = (static_cast<long>(s.day) * 1440 + s.arrival_minute) / step_minutes;
        const long steps = s.duration_minutes / step_minutes;
        for (long k = 0; k < steps; ++k) {
            const long t = start + k;
            if (t >= 0 && static_cast<std::size_t>(t) < n) p.values[static_cast<std::size_t>(t)] = 1.0;
        }
    }
    return p;
}

Profile synth_ev(std::uint64_t seed, int days, int step_minutes) {
    return ev_profile_from_sessions(draw_ev_sessions(seed, days, step_minutes), days, step_minutes);
}

Profile constant_profile(double value, int days, int step_minutes, std::string kind) {
    return Profile{step_minutes, std::vector<double>(profile_length(days, step_minutes), value),
                   std::move(kind)};
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

Profile load_profile_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open profile " + path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty profile file");

    const std::string_view header = trim(line);
    constexpr std::string_view key = "# step_minutes=";
    if (!header.starts_with(key)) throw ValidationError(path + ": first line must be '# step_minutes=<int>'");
    int step = 0;
    const auto digits = header.substr(key.size());
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), step);
    if (ec != std::errc() || ptr != digits.data() + digits.size())
        throw ValidationError(path + ": malformed step size");
    if (step <= 0) throw ValidationError(path + ": step size must be positive");
    check_step_minutes(step);

    Profile p{step, {}, "external"};
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        auto text = trim(line);
        if (text.empty()) throw ValidationError(path + ": missing value on row " + std::to_string(row));
        if (const auto comma = text.rfind(','); comma != std::string_view::npos)
            text = trim(text.substr(comma + 1));
        double value = 0.0;
        const auto [end, err] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (err != std::errc() || end != text.data() + text.size() || !std::isfinite(value))
            throw ValidationError(path + ": invalid value '" + std::string(text) + "' on row " +
                                  std::to_string(row));
        p.values.push_back(value);
    }
    if (p.values.empty()) throw ValidationError(path + ": profile has no values");
    return p;
}

void save_profile_csv(const Profile& profile, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeFailure("cannot write profile " + path);
    out << "# step_minutes=" << profile.step_minutes << "\n";
    char buf[32];
    for (double v : profile.values) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << "\n";
    }
}

}  // namespace gridguard
