// bookie_lab: solve, simulate, sweep, regret, roots.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bookie/config.hpp"
#include "bookie/experiment.hpp"
#include "bookie/market.hpp"
#include "bookie/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bookie;

namespace {

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "json";
};

struct Problem {
    BeliefDistribution dist;
    double g;
};

// solve and roots only need the distribution and g.
Problem problem_from(const json& doc) {
    if (!doc.is_object()) throw ConfigError("", "config must be a table");
    const json& d = detail::get_object(doc, "distribution", "");
    DistributionSpec spec{detail::get_string(d, "kind", "distribution."), detail::params_of(d, "distribution.")};
    const double g = detail::get_number(doc, "g", "", 0.5);
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("g", "must lie in (0, 1)");
    return {spec.build(), g};
}

void require_config(const GlobalOptions& opt) {
    if (opt.config.empty()) throw ConfigError("--config", "a config file is required");
}

json residual_json(const std::array<double, 2>& r) { return {number_or_null(r[0]), number_or_null(r[1])}; }

int cmd_solve(const GlobalOptions& opt, const std::string& method_name) {
    require_config(opt);
    const Problem pr = problem_from(load_document(opt.config));
    SolveMethod method;
    if (method_name == "grid") {
        method = SolveMethod::GridThenPolish;
    } else if (method_name == "foc") {
        method = SolveMethod::FocRoots;
    } else {
        throw ConfigError("--method", "expected grid or foc");
    }
    const auto sols = solve_optimal_prices(pr.dist, pr.g, method);
    if (opt.format == "csv") {
        std::cout << "a,b,profit,is_global,foc_residual_r,foc_residual_l\n";
        for (const auto& s : sols) {
            std::cout << format_double(s.prices.a) << ',' << format_double(s.prices.b) << ','
                      << format_double(s.profit) << ',' << (s.is_global ? "true" : "false") << ','
                      << format_double(s.foc_residual[0]) << ',' << format_double(s.foc_residual[1]) << '\n';
        }
        return 0;
    }
    const auto& best = sols.front();
    json out{{"a", best.prices.a},
             {"b", best.prices.b},
             {"profit", best.profit},
             {"is_global", best.is_global},
             {"foc_residual", residual_json(best.foc_residual)}};
    if (sols.size() > 1) {
        json others = json::array();
        for (std::size_t i = 1; i < sols.size(); ++i) {
            others.push_back({{"a", sols[i].prices.a}, {"b", sols[i].prices.b}, {"profit", sols[i].profit}});
        }
        out["local_maxima"] = others;
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_simulate(const GlobalOptions& opt) {
    require_config(opt);
    ExperimentConfig cfg = load_config(opt.config);
    const std::uint64_t seed = opt.seed.value_or(cfg.seeds.front());
    const RunResult res = run_experiment(cfg, seed);
    const std::string dir = opt.out.empty() ? cfg.output.dir : opt.out;
    if (!dir.empty()) write_run_files(dir, cfg, seed, res);
    if (opt.format == "csv") {
        write_trajectory_csv(std::cout, res.trajectory, res.regret, cfg.output.cadence,
                             {{"seed", std::to_string(seed)}, {"config_hash", config_hash(cfg.source)}});
    } else {
        std::cout << res.summary.dump(2) << '\n';
    }
    return 0;
}

int cmd_sweep(const GlobalOptions& opt, unsigned threads) {
    require_config(opt);
    const auto docs = expand_sweep(load_document(opt.config));
    const fs::path dir = opt.out;
    const SweepResult res = run_sweep(docs, threads, dir, opt.seed);
    if (!dir.empty()) {
        fs::create_directories(dir);
        std::ofstream runs(dir / "sweep_runs.csv");
        std::ofstream summary(dir / "sweep_summary.csv");
        if (!runs || !summary) throw Error("cannot write sweep tables under " + dir.string());
        write_sweep_runs_csv(runs, res);
        write_sweep_summary_csv(summary, res);
    }
    if (opt.format == "csv") {
        write_sweep_summary_csv(std::cout, res);
    } else {
        json rows = json::array();
        for (const auto& r : res.rows) {
            json row{{"config_index", r.config_index}, {"name", r.name}, {"config_hash", r.config_hash},
                     {"seed", r.seed}, {"status", r.ok ? "ok" : "error"}};
            if (r.ok) {
                row["summary"] = r.summary;
            } else {
                row["error"] = r.error;
            }
            rows.push_back(std::move(row));
        }
        std::cout << json{{"runs", rows}, {"failures", res.failures()}}.dump(2) << '\n';
    }
    if (res.failures() > 0) {
        std::cerr << res.failures() << " of " << res.rows.size() << " runs failed:\n";
        for (const auto& r : res.rows) {
            if (!r.ok) std::cerr << "  config " << r.config_index << " (" << r.name << "): " << r.error << '\n';
        }
        return 3;
    }
    return 0;
}

// Recomputes stochastic regret from a stored full-cadence trajectory.
int cmd_regret(const GlobalOptions& opt, const std::string& path) {
    require_config(opt);
    const Problem pr = problem_from(load_document(opt.config));
    std::ifstream in(path);
    if (!in) throw Error("cannot open trajectory " + path);
    const TrajectoryFile file = read_trajectory_csv(in);
    if (file.cadence != Cadence::Full) {
        throw Error("trajectory was written with sampled cadence; regret replay needs cadence = \"full\"");
    }
    const auto ba = file.meta_value("benchmark_a");
    const auto bb = file.meta_value("benchmark_b");
    if (!ba || !bb) throw Error("trajectory header lacks benchmark_a / benchmark_b");
    const Prices bench{parse_double(*ba), parse_double(*bb)};
    const auto series = stochastic_regret(file.trajectory, pr.dist, pr.g, bench);
    const double recomputed = series.empty() ? 0.0 : series.back();
    const double stored = file.regret.empty() ? 0.0 : file.regret.back();
    if (opt.format == "csv") {
        std::cout << "T,regret_stoch,stored_regret_stoch,bitwise_equal\n"
                  << file.trajectory.size() << ',' << format_double(recomputed) << ',' << format_double(stored) << ','
                  << (recomputed == stored ? "true" : "false") << '\n';
    } else {
        std::cout << json{{"T", file.trajectory.size()},
                          {"benchmark", {{"a", bench.a}, {"b", bench.b}}},
                          {"regret_stoch", recomputed},
                          {"stored_regret_stoch", stored},
                          {"bitwise_equal", recomputed == stored}}
                         .dump(2)
                  << '\n';
    }
    return 0;
}

int cmd_roots(const GlobalOptions& opt, double step) {
    require_config(opt);
    const Problem pr = problem_from(load_document(opt.config));
    const auto r = foc_roots(pr.dist, pr.g, step);
    const auto l = foc_roots_l(pr.dist, pr.g, step);
    if (opt.format == "csv") {
        std::cout << "side,root,profit_side\n";
        for (double x : r) {
            std::cout << "R," << format_double(x) << ','
                      << format_double(profit_r(pr.dist, pr.g, x)) << '\n';
        }
        for (double x : l) {
            std::cout << "L," << format_double(x) << ','
                      << format_double(profit_l(pr.dist, pr.g, x)) << '\n';
        }
        return 0;
    }
    std::cout << json{{"distribution", pr.dist.kind()},
                      {"g", pr.g},
                      {"count", r.size()},
                      {"roots", r},
                      {"count_l", l.size()},
                      {"roots_l", l}}
                     .dump(2)
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Binary betting-market pricing lab"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions opt;
    std::uint64_t seed = 0;
    app.add_option("--config", opt.config, "TOML or JSON config file");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config's seeds)");
    app.add_option("--out", opt.out, "Output directory");
    app.add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    std::string method = "grid";
    auto* solve = app.add_subcommand("solve", "Optimal prices for the config's belief law");
    solve->add_option("--method", method, "grid or foc")->check(CLI::IsMember({"grid", "foc"}));

    auto* simulate = app.add_subcommand("simulate", "Single run");

    unsigned threads = 0;
    auto* sweep = app.add_subcommand("sweep", "Runs every config and seed of a sweep file");
    sweep->add_option("--threads", threads, "Worker threads (0 = hardware), capped by BOOKIE_LAB_THREADS");

    std::string trajectory;
    auto* regret = app.add_subcommand("regret", "Recompute regret from a stored trajectory");
    regret->add_option("trajectory", trajectory, "Trajectory CSV")->required();

    double step = 1e-3;
    auto* roots = app.add_subcommand("roots", "Optimality-condition roots on each side");
    roots->add_option("--step", step, "Scan step");

    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) opt.seed = seed;

    try {
        if (*solve) return cmd_solve(opt, method);
        if (*simulate) return cmd_simulate(opt);
        if (*sweep) return cmd_sweep(opt, threads);
        if (*regret) return cmd_regret(opt, trajectory);
        if (*roots) return cmd_roots(opt, step);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
