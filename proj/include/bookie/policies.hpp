#pragma once

// Online price-setting policies. Bookmaker policies expose quote() and
// observe(); the LMSR market maker trades with the bettor directly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <variant>

#include "bookie/agents.hpp"
#include "bookie/error.hpp"
#include "bookie/market.hpp"
#include "bookie/market_types.hpp"
#include "bookie/numerics.hpp"

namespace bookie {

/// What the bookmaker sees of a bet: its side, its size and an estimate of
/// the bettor's wealth.
struct BetObservation {
    Side side = Side::NoBet;
    double stake = 0.0;
    double wealth_estimate = 1.0;
};

/// Inverts the Kelly rule at the quoted prices:
///   R: a + (1 - a) v / w_hat,   L: (1 - b)(1 - v / w_hat).
inline double estimate_belief(const Prices& prices, const BetObservation& bet) {
    const double fraction = bet.stake / bet.wealth_estimate;
    switch (bet.side) {
        case Side::ForR: return prices.a + (1.0 - prices.a) * fraction;
        case Side::ForL: return (1.0 - prices.b) * (1.0 - fraction);
        case Side::NoBet: break;
    }
    throw NoBetObserved("estimate_belief: bettor did not bet");
}

/// eta = gamma / (t + offset), with t the number of updates already made.
struct LearningRate {
    double gamma = 300.0;
    double offset = 5000.0;

    double at(long long updates_done) const { return gamma / (static_cast<double>(updates_done) + offset); }
};

inline constexpr LearningRate sa_default_schedule() { return {300.0, 5000.0}; }

inline constexpr double kPriceCeiling = 1.0 - 1e-9;

/// Stochastic approximation on the two optimality conditions, one price per
/// side, each moved only when its side is bet on:
///   a <- a - eta (a + G(a; g)     - p_hat)
///   b <- b - eta (b + G(b; 1 - g) - (1 - p_hat))
/// With an imprecise belief the R side runs on g+ and the L side on g-.
class SaPolicy {
public:
    SaPolicy(const BookmakerBelief& belief, Prices initial, LearningRate rate = sa_default_schedule(),
             bool per_side_counters = false)
        : g_r_(belief.upper.value_or(belief.g)),
          g_l_(1.0 - belief.lower.value_or(belief.g)),
          prices_(initial),
          rate_(rate),
          per_side_(per_side_counters) {
        if (!(rate.gamma > 0.0 && rate.offset > 0.0)) throw DomainError("sa: gamma and offset must be positive");
        if (initial.a < g_r_ || initial.a >= 1.0 || initial.b < g_l_ || initial.b >= 1.0) {
            throw DomainError("sa: initial prices must satisfy a in [g, 1), b in [1 - g, 1)");
        }
        const double bound = std::min({1.0, 1.0 / foc_G_lipschitz(g_r_), 1.0 / foc_G_lipschitz(g_l_)});
        if (rate.at(0) > bound) {
            throw DomainError("sa: first step size exceeds min(1, 1/L_G); prices could leave [g, 1)");
        }
    }

    Prices quote() const { return prices_; }

    void observe(const BetObservation& bet) {
        if (bet.side == Side::NoBet) return;
        const double p_hat = std::clamp(estimate_belief(prices_, bet), 0.0, 1.0);
        if (bet.side == Side::ForR) {
            const double eta = rate_.at(per_side_ ? updates_r_ : updates_r_ + updates_l_);
            const double next = prices_.a - eta * (prices_.a + foc_G(prices_.a, g_r_) - p_hat);
            prices_.a = clamp_counted(next, g_r_);
            ++updates_r_;
        } else {
            const double eta = rate_.at(per_side_ ? updates_l_ : updates_r_ + updates_l_);
            const double next = prices_.b - eta * (prices_.b + foc_G(prices_.b, g_l_) - (1.0 - p_hat));
            prices_.b = clamp_counted(next, g_l_);
            ++updates_l_;
        }
    }

    long long updates() const { return updates_r_ + updates_l_; }
    long long clamp_count() const { return clamps_; }

private:
    double clamp_counted(double x, double floor) {
        if (x < floor || x > kPriceCeiling) {
            ++clamps_;
            return std::clamp(x, floor, kPriceCeiling);
        }
        return x;
    }

    double g_r_;
    double g_l_;
    Prices prices_;
    LearningRate rate_;
    bool per_side_;
    long long updates_r_ = 0;
    long long updates_l_ = 0;
    long long clamps_ = 0;
};

inline double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

/// Follow the leader under fair odds: the running mean of belief estimates,
/// clipped to [tau, 1 - tau], is pushed through the closed-form optimum psi.
class FtlPolicy {
public:
    FtlPolicy(double g, double initial_a, double tau = 0.01) : g_(g), a_(initial_a), tau_(tau) {
        if (!(g > 0.0 && g < 1.0)) throw DomainError("ftl: g must lie in (0, 1)");
        if (!(initial_a > 0.0 && initial_a < 1.0)) throw DomainError("ftl: initial price must lie in (0, 1)");
        if (!(tau > 0.0 && tau < 0.5)) throw DomainError("ftl: tau must lie in (0, 0.5)");
    }

    Prices quote() const { return {a_, 1.0 - a_}; }

    void observe(const BetObservation& bet) {
        if (bet.side == Side::NoBet) return;
        const double p_hat = estimate_belief(quote(), bet);
        ++count_;
        const double t = static_cast<double>(count_);
        running_mean_ = ((t - 1.0) / t) * running_mean_ + p_hat / t;
        a_ = solve_fair_optimal(clip(running_mean_, tau_, 1.0 - tau_), g_);
    }

    double running_mean() const { return running_mean_; }
    long long updates() const { return count_; }

private:
    double g_;
    double a_;
    double tau_;
    double running_mean_ = 0.0;
    long long count_ = 0;
};

/// Heuristic that nudges prices toward equal money on both sides:
///   a <- a + eta (B_R - B_L),  b <- b + eta (B_L - B_R)
/// after every arrival, then clamps to (0, 1) and projects onto a + b >= 1.
class RiskBalancePolicy {
public:
    RiskBalancePolicy(Prices initial, LearningRate rate = sa_default_schedule())
        : prices_(initial), rate_(rate) {}

    Prices quote() const { return prices_; }

    void observe(const BetObservation& bet) {
        if (bet.side == Side::ForR) {
            total_r_ += bet.stake;
        } else if (bet.side == Side::ForL) {
            total_l_ += bet.stake;
        }
        const double eta = rate_.at(arrivals_++);
        const double imbalance = total_r_ - total_l_;
        double a = std::clamp(prices_.a + eta * imbalance, 1e-9, kPriceCeiling);
        double b = std::clamp(prices_.b - eta * imbalance, 1e-9, kPriceCeiling);
        if (a + b < 1.0) {
            const double shift = 0.5 * (1.0 - a - b);
            a += shift;
            b += shift;
        }
        prices_ = {a, b};
    }

    double total_r() const { return total_r_; }
    double total_l() const { return total_l_; }
    void set_totals(double r, double l) {
        total_r_ = r;
        total_l_ = l;
    }

private:
    Prices prices_;
    LearningRate rate_;
    double total_r_ = 0.0;
    double total_l_ = 0.0;
    long long arrivals_ = 0;
};

/// Logarithmic market scoring rule market maker,
///   C(s) = beta log(exp(s_R / beta) + exp(s_L / beta)),
/// trading with Kelly bettors who buy the share quantity on their preferred
/// side that maximises expected log wealth.
class LmsrPolicy {
public:
    explicit LmsrPolicy(double liquidity, double initial_price = 0.5) : beta_(liquidity) {
        if (!(liquidity > 0.0)) throw DomainError("lmsr: liquidity must be positive");
        if (!(initial_price > 0.0 && initial_price < 1.0)) throw DomainError("lmsr: initial price must lie in (0, 1)");
        shares_r_ = beta_ * numerics::logit(initial_price);
    }

    double price_r() const { return numerics::sigmoid((shares_r_ - shares_l_) / beta_); }

    Prices quote() const {
        const double pi = price_r();
        return {pi, 1.0 - pi};
    }

    /// Executes the bettor's optimal trade. The returned stake is the cost paid.
    BetOutcome trade(const BettorDraw& draw) {
        const double pi = price_r();
        if (draw.belief > pi) {
            const auto [shares, cost] = optimal_purchase(draw.belief, pi, draw.wealth);
            shares_r_ += shares;
            return {shares > 0.0 ? Side::ForR : Side::NoBet, cost};
        }
        if (draw.belief < pi) {
            const auto [shares, cost] = optimal_purchase(1.0 - draw.belief, 1.0 - pi, draw.wealth);
            shares_l_ += shares;
            return {shares > 0.0 ? Side::ForL : Side::NoBet, cost};
        }
        return {};
    }

    double liquidity() const { return beta_; }
    double shares_r() const { return shares_r_; }
    double shares_l() const { return shares_l_; }

private:
    struct Purchase {
        double shares;
        double cost;
    };

    // Shares x of an outcome currently priced pi, bought by a trader with
    // belief p in that outcome: cost c(x) = beta log(1 - pi + pi e^{x/beta}),
    // utility p log(w - c + x) + (1 - p) log(w - c).
    Purchase optimal_purchase(double p, double pi, double wealth) const {
        auto cost = [&](double x) { return beta_ * std::log1p(pi * std::expm1(x / beta_)); };
        auto marginal_price = [&](double x) {
            const double e = pi * std::exp(x / beta_);
            return e / (1.0 - pi + e);
        };
        auto slope = [&](double x) {
            const double c = cost(x);
            const double m = marginal_price(x);
            const double lose = wealth - c;
            if (!(lose > 0.0)) return -std::numeric_limits<double>::infinity();
            return p * (1.0 - m) / (lose + x) - (1.0 - p) * m / lose;
        };
        if (p >= 1.0) {
            // Certain bettor: spend everything but a sliver.
            const double x = beta_ * std::log1p(std::expm1(wealth * kFullStakeCap / beta_) / pi);
            return {x, cost(x)};
        }
        const double x_max = beta_ * std::log1p(std::expm1(wealth / beta_) / pi);
        // The slope runs to -inf as the trade approaches all of w; back off
        // until it is finite.
        double hi = x_max * (1.0 - 1e-12);
        while (!std::isfinite(slope(hi))) hi *= 1.0 - 1e-6;
        const double x = numerics::find_root(slope, 0.0, hi, 1e-12 * std::max(1.0, x_max));
        return {x, cost(x)};
    }

    double beta_;
    double shares_r_ = 0.0;
    double shares_l_ = 0.0;
};

/// Constant quote.
class FixedPolicy {
public:
    explicit FixedPolicy(Prices prices) : prices_(prices) {}
    Prices quote() const { return prices_; }
    void observe(const BetObservation&) {}

private:
    Prices prices_;
};

using AnyPolicy = std::variant<SaPolicy, FtlPolicy, RiskBalancePolicy, LmsrPolicy, FixedPolicy>;

inline std::string_view policy_kind(const AnyPolicy& policy) {
    static constexpr std::string_view names[] = {"sa", "ftl", "risk_balance", "lmsr", "fixed"};
    return names[policy.index()];
}

struct StepResult {
    Prices quoted;
    BetOutcome outcome;
    /// Belief estimate recovered from the bet; NaN when no bet or under LMSR.
    double belief_estimate;
};

/// One bettor arrival: quote, bettor response, policy update.
inline StepResult step(AnyPolicy& policy, const BettorDraw& draw, double wealth_estimate) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    return std::visit(
        [&](auto& p) -> StepResult {
            const Prices quoted = p.quote();
            if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LmsrPolicy>) {
                return {quoted, p.trade(draw), nan};
            } else {
                const BetOutcome outcome = kelly_bet(draw, quoted);
                const BetObservation obs{outcome.side, outcome.stake, wealth_estimate};
                p.observe(obs);
                const double p_hat = outcome.side == Side::NoBet ? nan : estimate_belief(quoted, obs);
                return {quoted, outcome, p_hat};
            }
        },
        policy);
}

}  // namespace bookie
