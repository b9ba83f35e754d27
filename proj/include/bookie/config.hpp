#pragma once

// Experiment configuration. TOML files are converted to JSON and parsed by
// one code path, so both formats accept exactly the same keys.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "bookie/beliefs.hpp"
#include "bookie/error.hpp"
#include "bookie/market_types.hpp"
#include "bookie/metrics.hpp"
#include "bookie/policies.hpp"
#include "bookie/random.hpp"

namespace bookie {

using nlohmann::json;

namespace detail {

inline json toml_to_json(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
        return out;
    }
    if (const auto* a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(toml_to_json(v));
        return out;
    }
    if (const auto* v = node.as_integer()) return v->get();
    if (const auto* v = node.as_floating_point()) return v->get();
    if (const auto* v = node.as_boolean()) return v->get();
    if (const auto* v = node.as_string()) return v->get();
    throw ConfigError("", "unsupported TOML value (dates and times are not accepted)");
}

// Typed lookups with field-qualified diagnostics.
inline const json* find(const json& obj, const char* key) {
    if (!obj.is_object()) return nullptr;
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline double get_number(const json& obj, const char* key, const std::string& path, std::optional<double> fallback = {}) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(path + key, "required number is missing");
    }
    if (!v->is_number()) throw ConfigError(path + key, "expected a number");
    return v->get<double>();
}

inline std::string get_string(const json& obj, const char* key, const std::string& path,
                              std::optional<std::string> fallback = {}) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(path + key, "required string is missing");
    }
    if (!v->is_string()) throw ConfigError(path + key, "expected a string");
    return v->get<std::string>();
}

inline bool get_bool(const json& obj, const char* key, const std::string& path, bool fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(path + key, "expected true or false");
    return v->get<bool>();
}

inline std::vector<double> get_numbers(const json& obj, const char* key, const std::string& path) {
    const json* v = find(obj, key);
    if (!v) throw ConfigError(path + key, "required array is missing");
    if (!v->is_array()) throw ConfigError(path + key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : *v) {
        if (!x.is_number()) throw ConfigError(path + key, "expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

inline const json& get_object(const json& obj, const char* key, const std::string& path) {
    const json* v = find(obj, key);
    if (!v) throw ConfigError(path + key, "required table is missing");
    if (!v->is_object()) throw ConfigError(path + key, "expected a table");
    return *v;
}

inline const json& params_of(const json& spec, const std::string& path) {
    static const json empty = json::object();
    const json* v = find(spec, "params");
    if (!v) return empty;
    if (!v->is_object()) throw ConfigError(path + "params", "expected a table");
    return *v;
}

}  // namespace detail

struct DistributionSpec {
    std::string kind;
    json params = json::object();

    BeliefDistribution build() const {
        const std::string path = "distribution.params.";
        using detail::get_number;
        try {
            if (kind == "two_block") {
                return BeliefDistribution::two_block(get_number(params, "m", path), get_number(params, "delta1", path),
                                                     get_number(params, "delta2", path));
            }
            if (kind == "sigmoid_gaussian_mixture") {
                return BeliefDistribution::sigmoid_gaussian_mixture(detail::get_numbers(params, "weights", path),
                                                                    detail::get_numbers(params, "means", path),
                                                                    detail::get_numbers(params, "stddevs", path));
            }
            if (kind == "uniform") {
                return BeliefDistribution::uniform(get_number(params, "lo", path, 0.0),
                                                   get_number(params, "hi", path, 1.0));
            }
            if (kind == "truncated_normal") {
                return BeliefDistribution::truncated_normal(get_number(params, "mu", path),
                                                            get_number(params, "sigma", path));
            }
            if (kind == "truncated_exponential") {
                return BeliefDistribution::truncated_exponential(get_number(params, "lambda", path));
            }
            if (kind == "point_mass") return BeliefDistribution::point_mass(get_number(params, "p", path));
            if (kind == "empirical") {
                return BeliefDistribution::empirical(detail::get_numbers(params, "samples", path));
            }
        } catch (const DomainError& e) {
            throw ConfigError("distribution.params", e.what());
        }
        throw ConfigError("distribution.kind", "unknown distribution '" + kind + "'");
    }
};

enum class WealthKind { Constant, Uniform, Lognormal };

/// Bettor wealth law. Uniform draws on [mean - spread, mean + spread];
/// lognormal uses log-sd `spread` with the location chosen to hit `mean`.
struct WealthSpec {
    WealthKind kind = WealthKind::Constant;
    double mean = 1.0;
    double spread = 0.0;

    double sample(RandomStream& rng) const {
        switch (kind) {
            case WealthKind::Constant: return mean;
            case WealthKind::Uniform: return mean - spread + 2.0 * spread * rng.uniform_open();
            case WealthKind::Lognormal: return mean * std::exp(spread * rng.normal() - 0.5 * spread * spread);
        }
        return mean;
    }
};

enum class BenchmarkMode { Global, FairGlobal, Custom };

struct BenchmarkSpec {
    std::optional<BenchmarkMode> mode;  // empty: chosen by policy kind
    std::optional<Prices> custom;
};

enum class WealthEstimate { Oracle, Disclosed };

struct PolicySpec {
    std::string kind = "sa";
    json params = json::object();
    WealthEstimate wealth_estimate = WealthEstimate::Oracle;
};

struct OutputSpec {
    std::string dir;  // empty: no files
    Cadence cadence = Cadence::Sampled;
    std::optional<double> resolve_p_true;
};

struct ExperimentConfig {
    std::string name;
    DistributionSpec distribution;
    WealthSpec wealth;
    double g = 0.5;
    PolicySpec policy;
    long long T = 1;
    std::vector<std::uint64_t> seeds{0};
    BenchmarkSpec benchmark;
    OutputSpec output;
    /// The document this config was parsed from.
    json source;

    BenchmarkMode benchmark_mode() const {
        if (benchmark.mode) return *benchmark.mode;
        return policy.kind == "ftl" || policy.kind == "lmsr" ? BenchmarkMode::FairGlobal : BenchmarkMode::Global;
    }
};

inline std::string to_string(BenchmarkMode m) {
    switch (m) {
        case BenchmarkMode::Global: return "global";
        case BenchmarkMode::FairGlobal: return "fair_global";
        case BenchmarkMode::Custom: return "custom";
    }
    return "global";
}

namespace detail {

inline Prices get_prices(const json& params, const char* key, const std::string& path, Prices fallback) {
    const json* v = find(params, key);
    if (!v) return fallback;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        throw ConfigError(path + key, "expected [a, b]");
    }
    return {(*v)[0].get<double>(), (*v)[1].get<double>()};
}

}  // namespace detail

/// Builds the policy named in `spec`. Parameter problems surface as ConfigError.
inline AnyPolicy make_policy(const PolicySpec& spec, double g, double wealth_mean) {
    using detail::get_number;
    const std::string path = "policy.params.";
    const json& p = spec.params;
    try {
        if (spec.kind == "sa") {
            const LearningRate rate{get_number(p, "gamma", path, 300.0), get_number(p, "offset", path, 5000.0)};
            const bool per_side = detail::get_bool(p, "per_side_counters", path, false);
            const Prices init = detail::get_prices(p, "initial", path, {0.55, 0.55});
            const BookmakerBelief belief = detail::find(p, "g_lower") || detail::find(p, "g_upper")
                                               ? BookmakerBelief(g, get_number(p, "g_lower", path, g),
                                                                 get_number(p, "g_upper", path, g))
                                               : BookmakerBelief(g);
            return SaPolicy(belief, init, rate, per_side);
        }
        if (spec.kind == "ftl") {
            return FtlPolicy(g, get_number(p, "initial_a", path, g), get_number(p, "tau", path, 0.01));
        }
        if (spec.kind == "risk_balance") {
            const LearningRate rate{get_number(p, "gamma", path, 300.0), get_number(p, "offset", path, 5000.0)};
            if (!(rate.gamma > 0.0 && rate.offset > 0.0)) throw DomainError("gamma and offset must be positive");
            const Prices init = detail::get_prices(p, "initial", path, {0.55, 0.55});
            return RiskBalancePolicy(Prices::checked(init.a, init.b), rate);
        }
        if (spec.kind == "lmsr") {
            return LmsrPolicy(get_number(p, "liquidity", path, 100.0 * wealth_mean),
                              get_number(p, "initial_price", path, 0.5));
        }
        if (spec.kind == "fixed") {
            return FixedPolicy(Prices::checked(get_number(p, "a", path), get_number(p, "b", path)));
        }
    } catch (const DomainError& e) {
        throw ConfigError("policy.params", e.what());
    }
    throw ConfigError("policy.kind", "expected sa, ftl, risk_balance, lmsr or fixed");
}

/// FNV-1a over the canonical JSON of everything except seeds and output.
inline std::string config_hash(const json& source) {
    json copy = source;
    if (copy.is_object()) {
        copy.erase("seeds");
        copy.erase("output");
        copy.erase("name");
    }
    const std::string text = copy.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline ExperimentConfig parse_config(const json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw ConfigError("", "config must be a table");
    ExperimentConfig cfg;
    cfg.source = doc;
    cfg.name = get_string(doc, "name", "", std::string());

    cfg.g = get_number(doc, "g", "", 0.5);
    if (!(cfg.g > 0.0 && cfg.g < 1.0)) throw ConfigError("g", "must lie in (0, 1)");

    const json* t = find(doc, "T");
    if (!t) throw ConfigError("T", "required integer is missing");
    if (!t->is_number_integer() || t->get<long long>() < 1) throw ConfigError("T", "must be an integer >= 1");
    cfg.T = t->get<long long>();

    if (const json* s = find(doc, "seeds")) {
        if (!s->is_array() || s->empty()) throw ConfigError("seeds", "must be a non-empty array of integers");
        cfg.seeds.clear();
        for (const auto& x : *s) {
            if (!x.is_number_integer() || x.get<long long>() < 0) {
                throw ConfigError("seeds", "must be a non-empty array of non-negative integers");
            }
            cfg.seeds.push_back(x.get<std::uint64_t>());
        }
    }

    const json& dist = get_object(doc, "distribution", "");
    cfg.distribution.kind = get_string(dist, "kind", "distribution.");
    cfg.distribution.params = params_of(dist, "distribution.");
    (void)cfg.distribution.build();

    if (const json* w = find(doc, "wealth")) {
        const std::string kind = get_string(*w, "kind", "wealth.", std::string("constant"));
        cfg.wealth.mean = get_number(*w, "mean", "wealth.", 1.0);
        if (!(cfg.wealth.mean > 0.0)) throw ConfigError("wealth.mean", "must be positive");
        if (kind == "constant") {
            cfg.wealth.kind = WealthKind::Constant;
        } else if (kind == "uniform") {
            cfg.wealth.kind = WealthKind::Uniform;
            cfg.wealth.spread = get_number(*w, "spread", "wealth.", 0.5 * cfg.wealth.mean);
            if (!(cfg.wealth.spread >= 0.0 && cfg.wealth.spread < cfg.wealth.mean)) {
                throw ConfigError("wealth.spread", "uniform spread must lie in [0, mean)");
            }
        } else if (kind == "lognormal") {
            cfg.wealth.kind = WealthKind::Lognormal;
            cfg.wealth.spread = get_number(*w, "sigma", "wealth.", 0.5);
            if (!(cfg.wealth.spread >= 0.0)) throw ConfigError("wealth.sigma", "must be non-negative");
        } else {
            throw ConfigError("wealth.kind", "expected constant, uniform or lognormal");
        }
    }

    const json& pol = get_object(doc, "policy", "");
    cfg.policy.kind = get_string(pol, "kind", "policy.");
    if (cfg.policy.kind != "sa" && cfg.policy.kind != "ftl" && cfg.policy.kind != "risk_balance" &&
        cfg.policy.kind != "lmsr" && cfg.policy.kind != "fixed") {
        throw ConfigError("policy.kind", "expected sa, ftl, risk_balance, lmsr or fixed");
    }
    cfg.policy.params = params_of(pol, "policy.");
    const std::string west = get_string(cfg.policy.params, "wealth_estimate", "policy.params.", std::string("oracle"));
    if (west == "oracle") {
        cfg.policy.wealth_estimate = WealthEstimate::Oracle;
    } else if (west == "disclosed") {
        cfg.policy.wealth_estimate = WealthEstimate::Disclosed;
    } else {
        throw ConfigError("policy.params.wealth_estimate", "expected oracle or disclosed");
    }
    (void)make_policy(cfg.policy, cfg.g, cfg.wealth.mean);

    if (const json* bm = find(doc, "benchmark")) {
        const std::string mode = get_string(*bm, "mode", "benchmark.");
        if (mode == "global") {
            cfg.benchmark.mode = BenchmarkMode::Global;
        } else if (mode == "fair_global") {
            cfg.benchmark.mode = BenchmarkMode::FairGlobal;
        } else if (mode == "custom") {
            cfg.benchmark.mode = BenchmarkMode::Custom;
            try {
                cfg.benchmark.custom = Prices::checked(get_number(*bm, "a", "benchmark."), get_number(*bm, "b", "benchmark."));
            } catch (const DomainError& e) {
                throw ConfigError("benchmark", e.what());
            }
        } else {
            throw ConfigError("benchmark.mode", "expected global, fair_global or custom");
        }
    }

    if (const json* out = find(doc, "output")) {
        cfg.output.dir = get_string(*out, "dir", "output.", std::string());
        const std::string cadence = get_string(*out, "cadence", "output.", std::string("sampled"));
        if (cadence == "sampled") {
            cfg.output.cadence = Cadence::Sampled;
        } else if (cadence == "full") {
            cfg.output.cadence = Cadence::Full;
        } else {
            throw ConfigError("output.cadence", "expected sampled or full");
        }
        if (find(*out, "resolve_p_true")) {
            const double p = get_number(*out, "resolve_p_true", "output.");
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("output.resolve_p_true", "must lie in [0, 1]");
            cfg.output.resolve_p_true = p;
        }
    }
    return cfg;
}

/// Parses TOML (by .toml extension) or JSON text into a JSON document.
inline json parse_document(const std::string& text, bool is_toml) {
    if (is_toml) {
        try {
            return detail::toml_to_json(toml::parse(text));
        } catch (const toml::parse_error& e) {
            std::ostringstream msg;
            msg << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
            throw ConfigError("", msg.str());
        }
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("JSON parse error: ") + e.what());
    }
}

inline json load_document(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_document(buf.str(), path.extension() == ".toml");
}

inline ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(load_document(path)); }

}  // namespace bookie
