#pragma once

// Trajectories, regret and the trajectory CSV format.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bookie/agents.hpp"
#include "bookie/beliefs.hpp"
#include "bookie/error.hpp"
#include "bookie/market.hpp"
#include "bookie/numerics.hpp"

namespace bookie {

/// One arriving bettor. `belief` and `wealth` are simulator-side truth; the
/// bookmaker only ever sees side and stake.
struct StepRecord {
    long long t = 0;
    double a = 0.0;
    double b = 0.0;
    Side side = Side::NoBet;
    double stake = 0.0;
    double wealth = 0.0;
    double belief = std::numeric_limits<double>::quiet_NaN();
    double p_hat = std::numeric_limits<double>::quiet_NaN();
    /// u(a_t, b_t) E[w].
    double step_profit = 0.0;
};

struct Trajectory {
    double wealth_mean = 1.0;
    std::vector<StepRecord> steps;

    void push(const StepRecord& r) {
        if (!steps.empty() && r.t <= steps.back().t) throw DomainError("trajectory: t must be strictly increasing");
        steps.push_back(r);
    }
    std::size_t size() const { return steps.size(); }
    bool empty() const { return steps.empty(); }
};

/// Expected profit from one bettor at the given prices.
inline double step_expected_profit(const BeliefDistribution& dist, double g, const Prices& prices,
                                   double wealth_mean) {
    return expected_profit(dist, g, prices) * wealth_mean;
}

/// Cumulative stochastic regret against a fixed benchmark; entry k covers the
/// first k + 1 bettors. Accumulated as sum (u(bench) - u(a_t, b_t)) E[w] so
/// constant-price runs give exactly linear series.
inline std::vector<double> stochastic_regret(const Trajectory& traj, const BeliefDistribution& dist, double g,
                                             const Prices& benchmark) {
    const double bench = step_expected_profit(dist, g, benchmark, traj.wealth_mean);
    std::vector<double> out;
    out.reserve(traj.size());
    double cum = 0.0;
    for (const auto& r : traj.steps) {
        cum += bench - step_expected_profit(dist, g, {r.a, r.b}, traj.wealth_mean);
        out.push_back(cum);
    }
    return out;
}

/// Same, reusing the per-step profits stored in the trajectory.
inline std::vector<double> stochastic_regret_stored(const Trajectory& traj, double benchmark_step_profit) {
    std::vector<double> out;
    out.reserve(traj.size());
    double cum = 0.0;
    for (const auto& r : traj.steps) {
        cum += benchmark_step_profit - r.step_profit;
        out.push_back(cum);
    }
    return out;
}

/// Bookmaker's g-expected take from a bet actually placed.
inline double realized_step_profit(const StepRecord& r, double g) {
    switch (r.side) {
        case Side::ForR: return r.stake * (1.0 - g / r.a);
        case Side::ForL: return r.stake * (1.0 - (1.0 - g) / r.b);
        case Side::NoBet: break;
    }
    return 0.0;
}

namespace detail {

// Hindsight profit of one side at a fixed price x over realized bettors:
//   c(x) * sum_{p_t > x} w_t (p_t - x),
// with p the belief in that side's outcome and h its probability under g.
class HindsightSide {
public:
    HindsightSide(std::vector<std::pair<double, double>> belief_wealth, double h) : h_(h) {
        std::sort(belief_wealth.begin(), belief_wealth.end());
        beliefs_.reserve(belief_wealth.size());
        suffix_w_.assign(belief_wealth.size() + 1, 0.0);
        suffix_wp_.assign(belief_wealth.size() + 1, 0.0);
        for (const auto& [p, w] : belief_wealth) beliefs_.push_back(p);
        for (std::size_t i = belief_wealth.size(); i-- > 0;) {
            suffix_w_[i] = suffix_w_[i + 1] + belief_wealth[i].second;
            suffix_wp_[i] = suffix_wp_[i + 1] + belief_wealth[i].second * belief_wealth[i].first;
        }
    }

    double value(double x) const {
        const auto first = std::upper_bound(beliefs_.begin(), beliefs_.end(), x) - beliefs_.begin();
        const double gap = suffix_wp_[first] - x * suffix_w_[first];
        return ((1.0 - h_) / (1.0 - x) - h_ / x) * gap;
    }

    double best(double grid_step) const {
        if (beliefs_.empty()) return 0.0;
        double best_x = 0.5;
        double best_v = -std::numeric_limits<double>::infinity();
        const auto n = static_cast<long>(std::floor(1.0 / grid_step));
        for (long i = 1; i < n; ++i) {
            const double x = static_cast<double>(i) * grid_step;
            const double v = value(x);
            if (v > best_v) {
                best_v = v;
                best_x = x;
            }
        }
        const double lo = std::max(best_x - grid_step, 1e-9);
        const double hi = std::min(best_x + grid_step, 1.0 - 1e-9);
        const auto polished = numerics::maximize([this](double x) { return value(x); }, lo, hi);
        // Zero is always attainable by pricing one side out of the market.
        return std::max({best_v, polished.value, 0.0});
    }

private:
    double h_;
    std::vector<double> beliefs_;
    std::vector<double> suffix_w_;
    std::vector<double> suffix_wp_;
};

inline double adversarial_regret_prefix(std::span<const StepRecord> steps, double g, double grid_step) {
    std::vector<std::pair<double, double>> r_side;
    std::vector<std::pair<double, double>> l_side;
    r_side.reserve(steps.size());
    l_side.reserve(steps.size());
    double achieved = 0.0;
    for (const auto& s : steps) {
        if (std::isnan(s.belief)) throw DomainError("adversarial_regret: trajectory lacks true beliefs");
        r_side.emplace_back(s.belief, s.wealth);
        l_side.emplace_back(1.0 - s.belief, s.wealth);
        achieved += realized_step_profit(s, g);
    }
    // The two sides separate and each optimum sits at a >= g, b >= 1 - g, so
    // the a + b >= 1 constraint never binds.
    const double best = HindsightSide(std::move(r_side), g).best(grid_step) +
                        HindsightSide(std::move(l_side), 1.0 - g).best(grid_step);
    return best - achieved;
}

}  // namespace detail

/// Realized-sum regret against the best fixed prices in hindsight.
inline double adversarial_regret(const Trajectory& traj, double g, double grid_step = 1e-3) {
    if (traj.empty()) return 0.0;
    return detail::adversarial_regret_prefix(traj.steps, g, grid_step);
}

/// Adversarial regret over each prefix of length checkpoints[k].
inline std::vector<double> adversarial_regret_series(const Trajectory& traj, double g,
                                                     const std::vector<std::size_t>& checkpoints,
                                                     double grid_step = 1e-3) {
    std::vector<double> out;
    out.reserve(checkpoints.size());
    for (std::size_t n : checkpoints) {
        if (n > traj.size()) throw DomainError("adversarial_regret_series: checkpoint beyond trajectory");
        out.push_back(n == 0 ? 0.0
                             : detail::adversarial_regret_prefix(std::span(traj.steps).first(n), g, grid_step));
    }
    return out;
}

/// Least-squares slope of log r against log t over the last decade t in [T/10, T].
inline double regret_rate_fit(std::span<const double> t, std::span<const double> r) {
    if (t.size() != r.size()) throw DomainError("regret_rate_fit: length mismatch");
    if (t.empty() || t.back() < 1e3) throw DegenerateSeries("regret_rate_fit: need a series reaching t >= 1000");
    const double start = t.back() / 10.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < start) continue;
        if (!(r[i] > 0.0)) throw DegenerateSeries("regret_rate_fit: non-positive regret in the fitted tail");
        const double x = std::log(t[i]);
        const double y = std::log(r[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) throw DegenerateSeries("regret_rate_fit: fewer than two points in the fitted tail");
    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    if (!(denom > 0.0)) throw DegenerateSeries("regret_rate_fit: degenerate abscissa");
    return (nn * sxy - sx * sy) / denom;
}

/// Series indexed t = 1, 2, ...
inline double regret_rate_fit(std::span<const double> series) {
    std::vector<double> t(series.size());
    std::iota(t.begin(), t.end(), 1.0);
    return regret_rate_fit(t, series);
}

// ---------------------------------------------------------------------------
// Trajectory CSV

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kTrajectoryColumns = "t,a,b,side,stake,p_hat,step_profit,cum_profit,regret_stoch";

enum class Cadence { Sampled, Full };

/// Sampled cadence keeps every step up to 1000, then every 1000th.
inline bool cadence_keeps(Cadence c, long long t) {
    return c == Cadence::Full || t <= 1000 || t % 1000 == 0;
}

/// Shortest round-trip text for a double; "nan" for NaN.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw DomainError("csv: bad number '" + std::string(s) + "'");
    }
    return x;
}

inline Side parse_side(std::string_view s) {
    if (s == "R") return Side::ForR;
    if (s == "L") return Side::ForL;
    if (s == "none") return Side::NoBet;
    throw DomainError("csv: bad side '" + std::string(s) + "'");
}

/// Writes header comments (schema version first, then `meta` as key=value),
/// the column row and one row per kept step.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::span<const double> regret,
                                 Cadence cadence, const std::vector<std::pair<std::string, std::string>>& meta) {
    if (regret.size() != traj.size()) throw DomainError("write_trajectory_csv: regret length mismatch");
    out << "# schema_version=" << kSchemaVersion << '\n';
    out << "# cadence=" << (cadence == Cadence::Full ? "full" : "sampled") << '\n';
    out << "# wealth_mean=" << format_double(traj.wealth_mean) << '\n';
    for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
    out << kTrajectoryColumns << '\n';
    double cum = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& r = traj.steps[i];
        cum += r.step_profit;
        if (!cadence_keeps(cadence, r.t)) continue;
        out << r.t << ',' << format_double(r.a) << ',' << format_double(r.b) << ',' << to_string(r.side) << ','
            << format_double(r.stake) << ',' << format_double(r.p_hat) << ',' << format_double(r.step_profit) << ','
            << format_double(cum) << ',' << format_double(regret[i]) << '\n';
    }
}

struct TrajectoryFile {
    int schema_version = 0;
    Cadence cadence = Cadence::Sampled;
    std::vector<std::pair<std::string, std::string>> meta;
    Trajectory trajectory;
    std::vector<double> cum_profit;
    std::vector<double> regret;

    std::optional<std::string> meta_value(std::string_view key) const {
        for (const auto& [k, v] : meta) {
            if (k == key) return v;
        }
        return std::nullopt;
    }
};

inline TrajectoryFile read_trajectory_csv(std::istream& in) {
    TrajectoryFile file;
    std::string line;
    bool saw_columns = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto body = std::string_view(line).substr(1);
            while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) continue;
            std::string key(body.substr(0, eq));
            std::string value(body.substr(eq + 1));
            if (key == "schema_version") {
                file.schema_version = std::stoi(value);
            } else if (key == "cadence") {
                file.cadence = value == "full" ? Cadence::Full : Cadence::Sampled;
            } else if (key == "wealth_mean") {
                file.trajectory.wealth_mean = parse_double(value);
            } else {
                file.meta.emplace_back(std::move(key), std::move(value));
            }
            continue;
        }
        if (!saw_columns) {
            if (line != kTrajectoryColumns) throw DomainError("csv: unexpected column header '" + line + "'");
            saw_columns = true;
            continue;
        }
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
            f.push_back(rest.substr(0, pos));
        }
        f.push_back(rest);
        if (f.size() != 9) throw DomainError("csv: expected 9 fields in '" + line + "'");
        StepRecord r;
        r.t = static_cast<long long>(parse_double(f[0]));
        r.a = parse_double(f[1]);
        r.b = parse_double(f[2]);
        r.side = parse_side(f[3]);
        r.stake = parse_double(f[4]);
        r.p_hat = parse_double(f[5]);
        r.step_profit = parse_double(f[6]);
        file.trajectory.push(r);
        file.cum_profit.push_back(parse_double(f[7]));
        file.regret.push_back(parse_double(f[8]));
    }
    if (file.schema_version != kSchemaVersion) {
        throw DomainError("csv: unsupported schema_version " + std::to_string(file.schema_version));
    }
    if (!saw_columns) throw DomainError("csv: missing column header");
    return file;
}

}  // namespace bookie
