#pragma once

// Bookmaker-side profit functions, gradients, first-order conditions and
// optimal-price solvers.
//
// The expected per-bettor profit under prices (a, b) and bookmaker belief g is
//   u(a, b) = c_R(a) E[(p - a)+] + c_L(b) E[(q - b)+],
//   c_R(a) = (1 - g)/(1 - a) - g/a,   c_L(b) = g/(1 - b) - (1 - g)/b.
// It separates into an R-side term in a and an L-side term in b, and the
// L side is the R side with p -> q = 1 - p and g -> 1 - g. Every solver below
// works one side at a time through that mirror.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "bookie/beliefs.hpp"
#include "bookie/error.hpp"
#include "bookie/market_types.hpp"
#include "bookie/numerics.hpp"

namespace bookie {

inline double profit_coefficient_r(double a, double g) { return (1.0 - g) / (1.0 - a) - g / a; }
inline double profit_coefficient_l(double b, double g) { return g / (1.0 - b) - (1.0 - g) / b; }

/// R-side share of u: c_R(a) E[(p - a)+].
inline double profit_r(const BeliefDistribution& dist, double g, double a) {
    return profit_coefficient_r(a, g) * dist.tail_expectation_above(a);
}

/// L-side share of u: c_L(b) E[(q - b)+].
inline double profit_l(const BeliefDistribution& dist, double g, double b) {
    return profit_coefficient_l(b, g) * dist.tail_expectation_below(b);
}

/// Expected profit from one unit-wealth Kelly bettor.
inline double expected_profit(const BeliefDistribution& dist, double g, const Prices& prices) {
    return profit_r(dist, g, prices.a) + profit_l(dist, g, prices.b);
}

/// Expected profit under fair odds (a, 1 - a): -(a - g)(a - E[p]) / (a (1 - a)).
inline double fair_profit(double mean_belief, double g, double a) {
    return -(a - g) * (a - mean_belief) / (a * (1.0 - a));
}

inline double fair_profit(const BeliefDistribution& dist, double g, double a) {
    return fair_profit(dist.mean(), g, a);
}

/// u_{1:T}: T i.i.d. bettors with mean wealth `wealth_mean` facing fixed prices.
inline double total_utility(const BeliefDistribution& dist, double wealth_mean, double g,
                            const Prices& prices, long long bettors) {
    if (bettors < 1) throw DomainError("total_utility: need at least one bettor");
    return static_cast<double>(bettors) * expected_profit(dist, g, prices) * wealth_mean;
}

/// G(x) = x (1 - x)(x - g) / (x^2 - 2 g x + g). The L side uses g -> 1 - g.
inline double foc_G(double x, double g) {
    return x * (1.0 - x) * (x - g) / (x * x - 2.0 * g * x + g);
}

/// Numerical Lipschitz constant of G on [g, 1], used to bound SA step sizes.
inline double foc_G_lipschitz(double g, int samples = 20000) {
    double best = 0.0;
    double prev = foc_G(g, g);
    for (int k = 1; k <= samples; ++k) {
        const double x = g + (1.0 - g) * static_cast<double>(k) / samples;
        const double cur = foc_G(x, g);
        best = std::max(best, std::abs(cur - prev) * samples / (1.0 - g));
        prev = cur;
    }
    return best;
}

/// Analytic gradient (du/da, du/db):
///   du/da = (F(a) - 1)(a - g) / (a (1 - a)) + E[(p - a)+] (a^2 - 2 g a + g) / (a^2 (1 - a)^2)
/// and the mirrored expression in (b, q, 1 - g).
inline std::array<double, 2> profit_gradient(const BeliefDistribution& dist, double g, const Prices& prices) {
    auto side = [](double x, double h, double survival, double tail) {
        const double x1 = x * (1.0 - x);
        return -survival * (x - h) / x1 + tail * (x * x - 2.0 * h * x + h) / (x1 * x1);
    };
    const double a = prices.a;
    const double b = prices.b;
    return {side(a, g, dist.survival(a), dist.tail_expectation_above(a)),
            side(b, 1.0 - g, dist.cdf_left(1.0 - b), dist.tail_expectation_below(b))};
}

/// Upsilon^R(a) = G(a; g) + a - E[p | p >= a].
inline double foc_residual_r(const BeliefDistribution& dist, double g, double a) {
    return foc_G(a, g) + a - dist.conditional_tail_mean(a);
}

/// Upsilon^L(b) = G(b; 1 - g) + b - E[q | q >= b].
inline double foc_residual_l(const BeliefDistribution& dist, double g, double b) {
    return foc_G(b, 1.0 - g) + b - dist.conditional_tail_mean_q(b);
}

inline std::array<double, 2> foc_residuals(const BeliefDistribution& dist, double g, const Prices& prices) {
    return {foc_residual_r(dist, g, prices.a), foc_residual_l(dist, g, prices.b)};
}

/// Optimal fair-odds price psi(E[p]) = sqrt(g p) / (sqrt(g p) + sqrt((1 - g)(1 - p))).
inline double solve_fair_optimal(double mean_belief, double g) {
    if (!(mean_belief > 0.0 && mean_belief < 1.0) || !(g > 0.0 && g < 1.0)) {
        throw DomainError("solve_fair_optimal: mean belief and g must lie in (0, 1)");
    }
    const double up = std::sqrt(g * mean_belief);
    return up / (up + std::sqrt((1.0 - g) * (1.0 - mean_belief)));
}

enum class SolveMethod { GridThenPolish, FocRoots };

inline std::string_view to_string(SolveMethod m) {
    return m == SolveMethod::GridThenPolish ? "grid" : "foc";
}

struct PriceSolution {
    Prices prices;
    double profit;
    bool is_global;
    std::array<double, 2> foc_residual;
};

struct SolverOptions {
    double grid_step = 1e-3;
    /// Distance kept from the box edges g, 1 - g and 1.
    double box_margin = 1e-6;
    /// Optimum closer than this to the search box edge counts as a boundary maximum.
    double boundary_tolerance = 1e-6;
    double root_tolerance = 1e-9;
};

namespace detail {

/// One side of the decoupled problem, expressed on the R side's terms:
/// maximise c(x; h) E[(y - x)+] over x in [h + margin, 1 - margin] where y is
/// p (R side, h = g) or q (L side, h = 1 - g).
struct SideProblem {
    const BeliefDistribution* dist;
    double h;
    bool mirrored;

    double profit(double x) const {
        return mirrored ? profit_coefficient_r(x, h) * dist->tail_expectation_below(x)
                        : profit_coefficient_r(x, h) * dist->tail_expectation_above(x);
    }
    double tail_probability(double x) const {
        return mirrored ? dist->cdf_left(1.0 - x) : dist->survival(x);
    }
    double residual(double x) const {
        return mirrored ? foc_G(x, h) + x - dist->conditional_tail_mean_q(x)
                        : foc_G(x, h) + x - dist->conditional_tail_mean(x);
    }
};

struct SideMaximum {
    double x;
    double profit;
};

inline std::vector<double> grid_points(double lo, double hi, double step) {
    std::vector<double> xs;
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    xs.reserve(n + 1);
    for (std::size_t k = 0; k < n; ++k) xs.push_back(lo + static_cast<double>(k) * step);
    xs.push_back(hi);
    return xs;
}

inline std::vector<SideMaximum> grid_maxima(const SideProblem& side, const SolverOptions& opt) {
    const double lo = side.h + opt.box_margin;
    const double hi = 1.0 - opt.box_margin;
    const auto xs = grid_points(lo, hi, opt.grid_step);
    std::vector<double> fs(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) fs[k] = side.profit(xs[k]);

    // Values at or below this are indistinguishable from the zero-profit
    // region outside the belief support.
    constexpr double floor = 1e-14;
    std::vector<SideMaximum> maxima;
    const std::size_t last = xs.size() - 1;
    for (std::size_t k = 0; k <= last; ++k) {
        const bool rises = k == 0 || fs[k] > fs[k - 1];
        const bool holds = k == last || fs[k] >= fs[k + 1];
        if (!rises || !holds || fs[k] <= floor) continue;
        const double left = xs[k == 0 ? 0 : k - 1];
        const double right = xs[k == last ? last : k + 1];
        auto best = numerics::maximize([&](double x) { return side.profit(x); }, left, right);
        if (fs[k] > best.value) best = {xs[k], fs[k]};
        maxima.push_back({best.x, best.value});
    }
    if (maxima.empty()) {
        const auto k = static_cast<std::size_t>(std::max_element(fs.begin(), fs.end()) - fs.begin());
        maxima.push_back({xs[k], fs[k]});
    }
    std::sort(maxima.begin(), maxima.end(), [](const auto& l, const auto& r) { return l.profit > r.profit; });
    if (maxima.front().x - lo <= opt.boundary_tolerance || hi - maxima.front().x <= opt.boundary_tolerance) {
        throw NoInteriorMax("profit maximum sits on the search box boundary");
    }
    return maxima;
}

/// Sign changes of the residual on the grid over (h, 1), refined by bracketed
/// root finding. Grid points where the conditioning tail has no mass end the scan.
inline std::vector<double> residual_roots(const SideProblem& side, double step, double root_tol) {
    std::vector<double> roots;
    double prev_x = side.h;
    double prev_r = side.h - (side.mirrored ? side.dist->conditional_tail_mean_q(side.h)
                                            : side.dist->conditional_tail_mean(side.h));
    for (double x = side.h + step; x < 1.0; x += step) {
        if (!(side.tail_probability(x) > 0.0)) break;
        const double r = side.residual(x);
        if ((prev_r < 0.0 && r >= 0.0) || (prev_r > 0.0 && r <= 0.0)) {
            if (r == 0.0) {
                roots.push_back(x);
            } else {
                roots.push_back(numerics::find_root([&](double t) { return side.residual(t); }, prev_x, x, root_tol));
            }
        }
        prev_x = x;
        prev_r = r;
    }
    return roots;
}

inline std::vector<SideMaximum> foc_maxima(const SideProblem& side, const SolverOptions& opt) {
    const auto roots = residual_roots(side, opt.grid_step, opt.root_tolerance);
    std::vector<SideMaximum> maxima;
    constexpr double h = 1e-4;
    for (double r : roots) {
        const double lo = std::max(side.h + opt.box_margin, r - h);
        const double hi = std::min(1.0 - opt.box_margin, r + h);
        const double centre = side.profit(r);
        const double second_difference = side.profit(lo) + side.profit(hi) - 2.0 * centre;
        if (second_difference < 0.0) maxima.push_back({r, centre});
    }
    if (maxima.empty()) throw NoInteriorMax("no interior critical point classified as a maximum");
    std::sort(maxima.begin(), maxima.end(), [](const auto& l, const auto& r) { return l.profit > r.profit; });
    return maxima;
}

inline std::array<double, 2> safe_residuals(const BeliefDistribution& dist, double g, const Prices& p) {
    auto guarded = [](auto&& f) {
        try {
            return f();
        } catch (const UndefinedTail&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    return {guarded([&] { return foc_residual_r(dist, g, p.a); }),
            guarded([&] { return foc_residual_l(dist, g, p.b); })};
}

}  // namespace detail

/// All local maximisers of u over [g, 1) x [1 - g, 1), sorted by profit with
/// the best flagged `is_global`. Local maxima of the separable objective are
/// the products of the per-side local maxima.
inline std::vector<PriceSolution> solve_optimal_prices(const BeliefDistribution& dist, double g,
                                                       SolveMethod method = SolveMethod::GridThenPolish,
                                                       const SolverOptions& opt = {}) {
    if (!(g > 0.0 && g < 1.0)) throw DomainError("solve_optimal_prices: g must lie in (0, 1)");
    const detail::SideProblem r_side{&dist, g, false};
    const detail::SideProblem l_side{&dist, 1.0 - g, true};
    const auto r_max = method == SolveMethod::GridThenPolish ? detail::grid_maxima(r_side, opt)
                                                             : detail::foc_maxima(r_side, opt);
    const auto l_max = method == SolveMethod::GridThenPolish ? detail::grid_maxima(l_side, opt)
                                                             : detail::foc_maxima(l_side, opt);
    std::vector<PriceSolution> out;
    for (const auto& r : r_max) {
        for (const auto& l : l_max) {
            const Prices p{r.x, l.x};
            out.push_back({p, r.profit + l.profit, false, detail::safe_residuals(dist, g, p)});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.profit > r.profit; });
    out.front().is_global = true;
    return out;
}

/// Global maximiser only.
inline PriceSolution solve_global_prices(const BeliefDistribution& dist, double g,
                                         SolveMethod method = SolveMethod::GridThenPolish) {
    return solve_optimal_prices(dist, g, method).front();
}

/// Refined roots of Upsilon^R on (g, 1).
inline std::vector<double> foc_roots(const BeliefDistribution& dist, double g, double grid_step = 1e-3) {
    if (!(grid_step > 0.0 && grid_step <= 1e-3)) throw DomainError("foc_roots: grid_step must lie in (0, 1e-3]");
    return detail::residual_roots({&dist, g, false}, grid_step, 1e-12);
}

/// Refined roots of Upsilon^L on (1 - g, 1).
inline std::vector<double> foc_roots_l(const BeliefDistribution& dist, double g, double grid_step = 1e-3) {
    if (!(grid_step > 0.0 && grid_step <= 1e-3)) throw DomainError("foc_roots_l: grid_step must lie in (0, 1e-3]");
    return detail::residual_roots({&dist, 1.0 - g, true}, grid_step, 1e-12);
}

/// Number of sign changes of Upsilon^R on (g, 1). One root means a unique maximiser.
inline std::size_t count_foc_roots(const BeliefDistribution& dist, double g, double grid_step = 1e-3) {
    return foc_roots(dist, g, grid_step).size();
}

struct ProfitLowerBounds {
    /// (g - E[p])^2, a lower bound on the optimal profit u*.
    std::optional<double> deviation_bound;
    /// CVaR_alpha(p) + CVaR_beta(q) - (a + b); needs a >= sqrt(g), b >= sqrt(1 - g).
    std::optional<double> cvar_bound;
    /// Profit with g+ on the R side and g- on the L side; needs a >= g+, 1 - b <= g-.
    std::optional<double> imprecise_bound;
};

/// Lower bounds on bookmaker profit. A bound whose precondition fails is left empty.
inline ProfitLowerBounds profit_lower_bounds(const BeliefDistribution& dist, const BookmakerBelief& belief,
                                             const Prices& prices) {
    ProfitLowerBounds out;
    const double g = belief.g;
    const double dev = g - dist.mean();
    out.deviation_bound = dev * dev;

    const double a = prices.a;
    const double b = prices.b;
    if (a >= std::sqrt(g) && b >= std::sqrt(1.0 - g)) {
        const double alpha = 1.0 / profit_coefficient_r(a, g);
        const double beta = 1.0 / profit_coefficient_l(b, g);
        if (alpha > 0.0 && alpha <= 1.0 + 1e-12 && beta > 0.0 && beta <= 1.0 + 1e-12) {
            out.cvar_bound = dist.cvar_upper(std::min(alpha, 1.0)) + dist.cvar_upper_q(std::min(beta, 1.0)) - (a + b);
        }
    }

    if (belief.imprecise() && a >= *belief.upper && 1.0 - b <= *belief.lower) {
        out.imprecise_bound = profit_coefficient_r(a, *belief.upper) * dist.tail_expectation_above(a) +
                              profit_coefficient_l(b, *belief.lower) * dist.tail_expectation_below(b);
    }
    return out;
}

}  // namespace bookie
