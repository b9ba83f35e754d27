#pragma once

// Simulation harness: one sequential run per (config, seed), sweeps across
// runs on a thread pool.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "bookie/config.hpp"
#include "bookie/market.hpp"
#include "bookie/metrics.hpp"
#include "bookie/policies.hpp"
#include "bookie/random.hpp"

namespace bookie {

/// Random streams used by a run under master seed s.
inline constexpr std::uint64_t kBettorStream = 0;
inline constexpr std::uint64_t kResolutionStream = 1;

struct Benchmark {
    BenchmarkMode mode;
    Prices prices;
    /// u(a, b) E[w]
    double step_profit;
};

inline Benchmark solve_benchmark(const ExperimentConfig& cfg, const BeliefDistribution& dist) {
    const BenchmarkMode mode = cfg.benchmark_mode();
    Prices prices{0.5, 0.5};
    switch (mode) {
        case BenchmarkMode::Global:
            try {
                prices = solve_global_prices(dist, cfg.g).prices;
            } catch (const NoInteriorMax& e) {
                throw SolverError(std::string("benchmark: ") + e.what());
            }
            break;
        case BenchmarkMode::FairGlobal: prices = Prices::fair(solve_fair_optimal(dist.mean(), cfg.g)); break;
        case BenchmarkMode::Custom: prices = *cfg.benchmark.custom; break;
    }
    return {mode, prices, step_expected_profit(dist, cfg.g, prices, cfg.wealth.mean)};
}

struct RunResult {
    nlohmann::json summary;
    Trajectory trajectory;
    std::vector<double> regret;
    /// Realized outcome of R per step, present when resolution was requested.
    std::vector<bool> outcomes;
};

/// Bookmaker cash flow from one settled bet: stake in, stake / price out if it wins.
inline double settled_cash_flow(const StepRecord& r, bool r_happened) {
    switch (r.side) {
        case Side::ForR: return r.stake - (r_happened ? r.stake / r.a : 0.0);
        case Side::ForL: return r.stake - (r_happened ? 0.0 : r.stake / r.b);
        case Side::NoBet: break;
    }
    return 0.0;
}

inline double recompute_cash_flow(const Trajectory& traj, const std::vector<bool>& outcomes) {
    double total = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) total += settled_cash_flow(traj.steps[i], outcomes[i]);
    return total;
}

inline nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

/// Runs one replica. Deterministic in (cfg, seed).
inline RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto started = std::chrono::steady_clock::now();
    const BeliefDistribution dist = cfg.distribution.build();
    const double ew = cfg.wealth.mean;
    const Benchmark bench = solve_benchmark(cfg, dist);
    AnyPolicy policy = make_policy(cfg.policy, cfg.g, ew);

    RandomStream bettors(seed, kBettorStream);
    RandomStream resolution(seed, kResolutionStream);

    RunResult res;
    res.trajectory.wealth_mean = ew;
    res.trajectory.steps.reserve(static_cast<std::size_t>(cfg.T));
    res.regret.reserve(static_cast<std::size_t>(cfg.T));

    Prices last_quote{-1.0, -1.0};
    double last_profit = 0.0;
    double regret = 0.0;
    double cash_flow = 0.0;
    for (long long t = 1; t <= cfg.T; ++t) {
        const double p = dist.sample(bettors);
        const double w = cfg.wealth.sample(bettors);
        const double w_hat = cfg.policy.wealth_estimate == WealthEstimate::Oracle ? ew : w;
        const StepResult sr = step(policy, {p, w}, w_hat);
        // Quotes often repeat (NoBet arrivals, fixed prices); skip the quadrature then.
        if (!(sr.quoted == last_quote)) {
            last_quote = sr.quoted;
            last_profit = step_expected_profit(dist, cfg.g, sr.quoted, ew);
        }
        StepRecord rec{t, sr.quoted.a, sr.quoted.b, sr.outcome.side, sr.outcome.stake, w, p, sr.belief_estimate,
                       last_profit};
        regret += bench.step_profit - last_profit;
        if (cfg.output.resolve_p_true) {
            const bool r_happened = resolution.uniform() < *cfg.output.resolve_p_true;
            res.outcomes.push_back(r_happened);
            cash_flow += settled_cash_flow(rec, r_happened);
        }
        res.trajectory.steps.push_back(rec);
        res.regret.push_back(regret);
    }

    const Prices final_quote = std::visit([](const auto& p) { return p.quote(); }, policy);
    const auto residuals = detail::safe_residuals(dist, cfg.g, final_quote);
    long long clamps = 0;
    long long updates = 0;
    if (const auto* sa = std::get_if<SaPolicy>(&policy)) {
        clamps = sa->clamp_count();
        updates = sa->updates();
    } else if (const auto* ftl = std::get_if<FtlPolicy>(&policy)) {
        updates = ftl->updates();
    }
    double achieved = 0.0;
    for (const auto& r : res.trajectory.steps) achieved += r.step_profit;

    nlohmann::json s;
    s["schema_version"] = kSchemaVersion;
    s["name"] = cfg.name;
    s["config_hash"] = config_hash(cfg.source);
    s["seed"] = seed;
    s["seed_split"] = "splitmix64(splitmix64(seed) ^ splitmix64(stream + 1)); bettors stream 0, resolution stream 1";
    s["policy"] = std::string(policy_kind(policy));
    s["distribution"] = std::string(dist.kind());
    s["g"] = cfg.g;
    s["T"] = cfg.T;
    s["final_prices"] = {{"a", final_quote.a}, {"b", final_quote.b}};
    s["foc_residual"] = {number_or_null(residuals[0]), number_or_null(residuals[1])};
    s["benchmark"] = {{"mode", to_string(bench.mode)},
                      {"a", bench.prices.a},
                      {"b", bench.prices.b},
                      {"step_profit", bench.step_profit}};
    s["achieved_profit"] = achieved;
    s["average_step_profit"] = achieved / static_cast<double>(cfg.T);
    s["regret"] = {{"stochastic", regret}, {"adversarial", adversarial_regret(res.trajectory, cfg.g)}};
    s["clamp_count"] = clamps;
    s["policy_updates"] = updates;
    if (cfg.output.resolve_p_true) {
        const double recomputed = recompute_cash_flow(res.trajectory, res.outcomes);
        s["realized"] = {{"p_true", *cfg.output.resolve_p_true},
                         {"cash_flow", cash_flow},
                         {"recomputed", recomputed},
                         {"conserved", cash_flow == recomputed}};
    }
    s["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    res.summary = std::move(s);
    return res;
}

inline std::string run_basename(const ExperimentConfig& cfg, std::uint64_t seed) {
    const std::string stem = cfg.name.empty() ? cfg.policy.kind : cfg.name;
    return stem + "_seed" + std::to_string(seed);
}

/// Writes <dir>/<name>_seed<seed>.csv and .json.
inline void write_run_files(const std::filesystem::path& dir, const ExperimentConfig& cfg, std::uint64_t seed,
                            const RunResult& res) {
    std::filesystem::create_directories(dir);
    const std::string base = run_basename(cfg, seed);
    std::ofstream csv(dir / (base + ".csv"));
    if (!csv) throw Error("cannot write " + (dir / (base + ".csv")).string());
    write_trajectory_csv(csv, res.trajectory, res.regret, cfg.output.cadence,
                         {{"seed", std::to_string(seed)},
                          {"bettor_stream", std::to_string(kBettorStream)},
                          {"config_hash", config_hash(cfg.source)},
                          {"policy", cfg.policy.kind},
                          {"g", format_double(cfg.g)},
                          {"benchmark_a", format_double(res.summary["benchmark"]["a"].get<double>())},
                          {"benchmark_b", format_double(res.summary["benchmark"]["b"].get<double>())}});
    std::ofstream js(dir / (base + ".json"));
    if (!js) throw Error("cannot write " + (dir / (base + ".json")).string());
    js << res.summary.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Sweeps

/// Expands a sweep document into config documents. Accepted shapes:
///   {"configs": [cfg, ...]}
///   {"base": cfg, "grid": {"dotted.path": [v1, v2, ...], ...}}   (cartesian product)
///   cfg                                                          (single config)
inline std::vector<nlohmann::json> expand_sweep(const nlohmann::json& doc) {
    std::vector<nlohmann::json> out;
    if (doc.contains("configs")) {
        if (!doc["configs"].is_array()) throw ConfigError("configs", "expected an array of configs");
        for (const auto& c : doc["configs"]) out.push_back(c);
        return out;
    }
    if (doc.contains("base")) {
        out.push_back(doc["base"]);
        if (!doc.contains("grid")) return out;
        const auto& grid = doc["grid"];
        if (!grid.is_object()) throw ConfigError("grid", "expected a table of value lists");
        for (const auto& [key, values] : grid.items()) {
            if (!values.is_array() || values.empty()) throw ConfigError("grid." + key, "expected a non-empty array");
            std::string pointer = "/" + key;
            std::replace(pointer.begin(), pointer.end(), '.', '/');
            std::vector<nlohmann::json> next;
            for (const auto& partial : out) {
                for (const auto& v : values) {
                    nlohmann::json c = partial;
                    c[nlohmann::json::json_pointer(pointer)] = v;
                    std::string name = c.value("name", std::string());
                    name += (name.empty() ? "" : ",") + key + "=" + v.dump();
                    c["name"] = name;
                    next.push_back(std::move(c));
                }
            }
            out = std::move(next);
        }
        return out;
    }
    out.push_back(doc);
    return out;
}

struct SweepRow {
    std::size_t config_index = 0;
    std::string name;
    std::string config_hash;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    nlohmann::json summary;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t failures() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.ok; }));
    }
};

/// Thread count: the request, capped by BOOKIE_LAB_THREADS and the job count.
inline unsigned sweep_threads(unsigned requested, std::size_t jobs) {
    unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    if (const char* env = std::getenv("BOOKIE_LAB_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, jobs)));
}

/// Runs every (config, seed) pair. Bad configs and failed runs become error
/// rows; the sweep itself never aborts. Per-run files go to `out_dir` when set.
inline SweepResult run_sweep(const std::vector<nlohmann::json>& docs, unsigned parallelism,
                             const std::filesystem::path& out_dir = {},
                             std::optional<std::uint64_t> seed_override = {}) {
    struct Job {
        std::size_t config_index;
        std::optional<ExperimentConfig> cfg;
        std::uint64_t seed;
        std::string parse_error;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        try {
            ExperimentConfig cfg = parse_config(docs[i]);
            if (seed_override) cfg.seeds = {*seed_override};
            for (std::uint64_t s : cfg.seeds) jobs.push_back({i, cfg, s, {}});
        } catch (const Error& e) {
            jobs.push_back({i, std::nullopt, 0, e.what()});
        }
    }

    SweepResult result;
    result.rows.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
            const Job& job = jobs[j];
            SweepRow& row = result.rows[j];
            row.config_index = job.config_index;
            row.seed = job.seed;
            if (!job.cfg) {
                row.name = docs[job.config_index].value("name", std::string());
                row.error = job.parse_error;
                continue;
            }
            row.name = job.cfg->name;
            row.config_hash = config_hash(job.cfg->source);
            try {
                RunResult res = run_experiment(*job.cfg, job.seed);
                if (!out_dir.empty()) write_run_files(out_dir, *job.cfg, job.seed, res);
                row.summary = std::move(res.summary);
                row.ok = true;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };
    const unsigned threads = sweep_threads(parallelism, jobs.size());
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return result;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// One row per run.
inline void write_sweep_runs_csv(std::ostream& out, const SweepResult& res) {
    out << "# schema_version=" << kSchemaVersion << '\n';
    out << "config_index,name,config_hash,seed,status,a,b,benchmark_a,benchmark_b,benchmark_step_profit,"
           "regret_stoch,regret_adv,clamp_count,error\n";
    for (const auto& r : res.rows) {
        out << r.config_index << ',' << csv_field(r.name) << ',' << r.config_hash << ',' << r.seed << ','
            << (r.ok ? "ok" : "error") << ',';
        if (r.ok) {
            const auto& s = r.summary;
            out << format_double(s["final_prices"]["a"].get<double>()) << ','
                << format_double(s["final_prices"]["b"].get<double>()) << ','
                << format_double(s["benchmark"]["a"].get<double>()) << ','
                << format_double(s["benchmark"]["b"].get<double>()) << ','
                << format_double(s["benchmark"]["step_profit"].get<double>()) << ','
                << format_double(s["regret"]["stochastic"].get<double>()) << ','
                << format_double(s["regret"]["adversarial"].get<double>()) << ',' << s["clamp_count"].get<long long>()
                << ",\n";
        } else {
            out << ",,,,,,,," << csv_field(r.error) << '\n';
        }
    }
}

/// One row per config: mean/min/max of final stochastic regret across seeds.
inline void write_sweep_summary_csv(std::ostream& out, const SweepResult& res) {
    out << "# schema_version=" << kSchemaVersion << '\n';
    out << "config_index,name,config_hash,runs,failures,regret_mean,regret_min,regret_max,benchmark_a,benchmark_b\n";
    std::size_t n_configs = 0;
    for (const auto& r : res.rows) n_configs = std::max(n_configs, r.config_index + 1);
    for (std::size_t c = 0; c < n_configs; ++c) {
        std::string name, hash;
        std::size_t runs = 0, failures = 0;
        double sum = 0.0, lo = INFINITY, hi = -INFINITY;
        double ba = NAN, bb = NAN;
        for (const auto& r : res.rows) {
            if (r.config_index != c) continue;
            name = r.name;
            if (!r.config_hash.empty()) hash = r.config_hash;
            if (!r.ok) {
                ++failures;
                continue;
            }
            ++runs;
            const double reg = r.summary["regret"]["stochastic"].get<double>();
            sum += reg;
            lo = std::min(lo, reg);
            hi = std::max(hi, reg);
            ba = r.summary["benchmark"]["a"].get<double>();
            bb = r.summary["benchmark"]["b"].get<double>();
        }
        out << c << ',' << csv_field(name) << ',' << hash << ',' << runs << ',' << failures << ',';
        if (runs > 0) {
            out << format_double(sum / static_cast<double>(runs)) << ',' << format_double(lo) << ','
                << format_double(hi) << ',' << format_double(ba) << ',' << format_double(bb) << '\n';
        } else {
            out << ",,,,\n";
        }
    }
}

}  // namespace bookie
