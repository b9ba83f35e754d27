#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bookie/experiment.hpp"

using namespace bookie;
using nlohmann::json;

namespace {

json base_doc() {
    return json::parse(R"({
        "name": "unit",
        "g": 0.5,
        "T": 2000,
        "seeds": [1],
        "distribution": {"kind": "sigmoid_gaussian_mixture",
                         "params": {"weights": [0.25, 0.75], "means": [2.0, -1.0], "stddevs": [1.0, 1.0]}},
        "policy": {"kind": "sa"}
    })");
}

std::string error_field(const json& doc) {
    try {
        (void)parse_config(doc);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<none>";
}

json without_wall_time(json s) {
    s.erase("wall_time_s");
    return s;
}

}  // namespace

TEST(Config, ErrorsNameTheField) {
    auto d = base_doc();
    d.erase("T");
    EXPECT_EQ(error_field(d), "T");

    d = base_doc();
    d["g"] = 1.5;
    EXPECT_EQ(error_field(d), "g");

    d = base_doc();
    d["policy"]["kind"] = "martingale";
    EXPECT_EQ(error_field(d), "policy.kind");

    d = base_doc();
    d["distribution"]["params"].erase("means");
    EXPECT_EQ(error_field(d).rfind("distribution.params", 0), 0u);

    d = base_doc();
    d["output"] = {{"cadence", "hourly"}};
    EXPECT_EQ(error_field(d), "output.cadence");

    d = base_doc();
    d["policy"]["params"] = {{"gamma", 1e6}};
    EXPECT_NE(error_field(d), "<none>");
}

TEST(Config, TomlAndJsonAgree) {
    const std::string toml_text = R"(
name = "unit"
g = 0.5
T = 2000
seeds = [1]

[distribution]
kind = "sigmoid_gaussian_mixture"
params = { weights = [0.25, 0.75], means = [2.0, -1.0], stddevs = [1.0, 1.0] }

[policy]
kind = "sa"
)";
    const json from_toml = parse_document(toml_text, true);
    EXPECT_EQ(from_toml, base_doc());
    EXPECT_EQ(config_hash(from_toml), config_hash(base_doc()));
    EXPECT_THROW(parse_document("g = [", true), ConfigError);
    EXPECT_THROW(parse_document("{", false), ConfigError);
}

TEST(Config, HashIgnoresSeedsAndOutput) {
    auto d = base_doc();
    auto e = d;
    e["seeds"] = {7, 8};
    e["output"] = {{"dir", "x"}};
    EXPECT_EQ(config_hash(d), config_hash(e));
    e["g"] = 0.4;
    EXPECT_NE(config_hash(d), config_hash(e));
}

TEST(Experiment, Deterministic) {
    const auto cfg = parse_config(base_doc());
    const auto one = run_experiment(cfg, 11);
    const auto two = run_experiment(cfg, 11);
    EXPECT_EQ(without_wall_time(one.summary), without_wall_time(two.summary));
    EXPECT_EQ(one.regret, two.regret);
    const auto other = run_experiment(cfg, 12);
    EXPECT_NE(one.regret.back(), other.regret.back());
}

TEST(Experiment, UnanimousCrowdAtTheFairPriceNeverBets) {
    auto d = base_doc();
    d["distribution"] = {{"kind", "point_mass"}, {"params", {{"p", 0.5}}}};
    d["policy"] = {{"kind", "fixed"}, {"params", {{"a", 0.5}, {"b", 0.5}}}};
    d["benchmark"] = {{"mode", "custom"}, {"a", 0.5}, {"b", 0.5}};
    const auto res = run_experiment(parse_config(d), 3);
    for (const auto& r : res.trajectory.steps) {
        EXPECT_EQ(r.side, Side::NoBet);
        EXPECT_EQ(r.stake, 0.0);
        EXPECT_EQ(r.step_profit, 0.0);
    }
    EXPECT_EQ(res.regret.back(), 0.0);
    EXPECT_EQ(res.summary["regret"]["adversarial"].get<double>(), 0.0);
}

TEST(Experiment, CashFlowIsConserved) {
    auto d = base_doc();
    d["output"] = {{"resolve_p_true", 0.5}};
    const auto res = run_experiment(parse_config(d), 4);
    ASSERT_TRUE(res.summary.contains("realized"));
    EXPECT_TRUE(res.summary["realized"]["conserved"].get<bool>());
    EXPECT_EQ(res.outcomes.size(), res.trajectory.size());
}

TEST(Experiment, RegretReplaysFromFullCadenceFile) {
    auto d = base_doc();
    d["output"] = {{"cadence", "full"}};
    const auto cfg = parse_config(d);
    const auto res = run_experiment(cfg, 5);
    const auto dir = std::filesystem::temp_directory_path() / "bookie_harness_replay";
    std::filesystem::remove_all(dir);
    write_run_files(dir, cfg, 5, res);
    std::ifstream in(dir / (run_basename(cfg, 5) + ".csv"));
    const auto file = read_trajectory_csv(in);
    ASSERT_EQ(file.trajectory.size(), res.trajectory.size());
    const double bench = res.summary["benchmark"]["step_profit"].get<double>();
    EXPECT_EQ(stochastic_regret_stored(file.trajectory, bench), res.regret);
    std::filesystem::remove_all(dir);
}

TEST(Sweep, SeedsShareTheConfigHash) {
    auto d = base_doc();
    d["T"] = 200;
    d["seeds"] = {1, 2};
    const auto res = run_sweep(expand_sweep(d), 2);
    ASSERT_EQ(res.rows.size(), 2u);
    EXPECT_EQ(res.failures(), 0u);
    EXPECT_EQ(res.rows[0].config_hash, res.rows[1].config_hash);
    EXPECT_NE(res.rows[0].seed, res.rows[1].seed);
}

TEST(Sweep, BadConfigBecomesAnErrorRow) {
    auto good = base_doc();
    good["T"] = 200;
    auto bad = good;
    bad["g"] = -1.0;
    const json doc = {{"configs", {good, bad, good}}};
    const auto res = run_sweep(expand_sweep(doc), 3);
    ASSERT_EQ(res.rows.size(), 3u);
    EXPECT_EQ(res.failures(), 1u);
    EXPECT_FALSE(res.rows[1].ok);
    EXPECT_NE(res.rows[1].error.find("g"), std::string::npos);

    std::ostringstream runs, summary;
    write_sweep_runs_csv(runs, res);
    write_sweep_summary_csv(summary, res);
    EXPECT_NE(runs.str().find("error"), std::string::npos);
}

TEST(Sweep, GridExpandsToTheCartesianProduct) {
    auto base = base_doc();
    const json doc = {{"base", base}, {"grid", {{"g", {0.45, 0.5}}, {"policy.params.gamma", {100.0, 200.0, 300.0}}}}};
    const auto docs = expand_sweep(doc);
    ASSERT_EQ(docs.size(), 6u);
    for (const auto& x : docs) EXPECT_NO_THROW((void)parse_config(x));
}
