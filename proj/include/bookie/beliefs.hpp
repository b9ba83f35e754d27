#pragma once

// Bettor-belief laws on [0, 1] and the tail integrals every profit formula
// consumes.

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "bookie/error.hpp"
#include "bookie/numerics.hpp"
#include "bookie/random.hpp"

namespace bookie {

namespace laws {

/// Uniform block on [lo, hi] carrying probability `weight`. TwoBlock and
/// Uniform are both built from these, so their integrals are exact.
struct Block {
    double lo;
    double hi;
    double weight;

    double pdf(double p) const { return (p >= lo && p <= hi) ? weight / (hi - lo) : 0.0; }
    double cdf(double p) const {
        if (p <= lo) return 0.0;
        if (p >= hi) return weight;
        return weight * (p - lo) / (hi - lo);
    }
    // E[(X - a)+] restricted to this block.
    double tail_above(double a) const {
        if (a <= lo) return weight * (0.5 * (lo + hi) - a);
        if (a >= hi) return 0.0;
        return weight * (hi - a) * (hi - a) / (2.0 * (hi - lo));
    }
    // E[(x - X)+] restricted to this block.
    double tail_below(double x) const {
        if (x >= hi) return weight * (x - 0.5 * (lo + hi));
        if (x <= lo) return 0.0;
        return weight * (x - lo) * (x - lo) / (2.0 * (hi - lo));
    }
    double mean_contribution() const { return weight * 0.5 * (lo + hi); }
};

/// f_{m, d1, d2}: half the mass uniform on m +- d1, half on (1 - m) +- d2.
struct TwoBlock {
    double m;
    double delta1;
    double delta2;

    Block upper() const { return {m - delta1, m + delta1, 0.5}; }
    Block lower() const { return {1.0 - m - delta2, 1.0 - m + delta2, 0.5}; }

    double pdf(double p) const { return upper().pdf(p) + lower().pdf(p); }
    double cdf(double p) const { return upper().cdf(p) + lower().cdf(p); }
    double cdf_left(double p) const { return cdf(p); }
    double tail_above(double a) const { return upper().tail_above(a) + lower().tail_above(a); }
    double tail_below(double x) const { return upper().tail_below(x) + lower().tail_below(x); }
    double mean() const { return 0.5; }
    double sample(RandomStream& rng) const {
        const Block b = rng.uniform() < 0.5 ? upper() : lower();
        return b.lo + (b.hi - b.lo) * rng.uniform();
    }
    std::pair<double, double> support() const { return {lower().lo, upper().hi}; }
};

struct Uniform {
    double lo;
    double hi;

    Block block() const { return {lo, hi, 1.0}; }
    double pdf(double p) const { return block().pdf(p); }
    double cdf(double p) const { return block().cdf(p); }
    double cdf_left(double p) const { return cdf(p); }
    double tail_above(double a) const { return block().tail_above(a); }
    double tail_below(double x) const { return block().tail_below(x); }
    double mean() const { return 0.5 * (lo + hi); }
    double sample(RandomStream& rng) const { return lo + (hi - lo) * rng.uniform(); }
    std::pair<double, double> support() const { return {lo, hi}; }
};

/// Belief sigmoid(s) with s drawn from a Gaussian mixture. Distribution
/// functions go through the logit transform; tail integrals use quadrature.
struct SigmoidGaussianMixture {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stddevs;
    double cached_mean = 0.0;

    double pdf(double p) const {
        if (p <= 0.0 || p >= 1.0) return 0.0;
        const double s = numerics::logit(p);
        double density = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            density += weights[i] * numerics::normal_pdf((s - means[i]) / stddevs[i]) / stddevs[i];
        }
        return density / (p * (1.0 - p));
    }
    double cdf(double p) const {
        if (p <= 0.0) return 0.0;
        if (p >= 1.0) return 1.0;
        return cdf_s(numerics::logit(p));
    }
    double cdf_left(double p) const { return cdf(p); }
    double survival(double p) const {
        if (p <= 0.0) return 1.0;
        if (p >= 1.0) return 0.0;
        return survival_s(numerics::logit(p));
    }
    // Tail integrals run in logit space: with p = sigmoid(s), dp = p (1 - p) ds,
    // which removes the endpoint singularity of the transformed density.
    double survival_s(double s) const {
        double c = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            c += weights[i] * numerics::normal_sf((s - means[i]) / stddevs[i]);
        }
        return c;
    }
    double cdf_s(double s) const {
        double c = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            c += weights[i] * numerics::normal_cdf((s - means[i]) / stddevs[i]);
        }
        return c;
    }
    double tail_above(double a) const {
        if (a >= 1.0) return 0.0;
        if (a <= 0.0) return cached_mean - a;
        const double lo = numerics::logit(a);
        double hi = lo;
        double spread = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            hi = std::max(hi, means[i] + 10.0 * stddevs[i]);
            spread = std::max(spread, stddevs[i]);
        }
        hi = std::max(hi, lo + 10.0 * spread);
        return numerics::integrate(
            [this](double s) {
                const double p = numerics::sigmoid(s);
                return survival_s(s) * p * (1.0 - p);
            },
            lo, hi);
    }
    double tail_below(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return x - cached_mean;
        const double hi = numerics::logit(x);
        double lo = hi;
        double spread = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            lo = std::min(lo, means[i] - 10.0 * stddevs[i]);
            spread = std::max(spread, stddevs[i]);
        }
        lo = std::min(lo, hi - 10.0 * spread);
        return numerics::integrate(
            [this](double s) {
                const double p = numerics::sigmoid(s);
                return cdf_s(s) * p * (1.0 - p);
            },
            lo, hi);
    }
    double mean() const { return cached_mean; }
    double sample(RandomStream& rng) const {
        const double u = rng.uniform();
        std::size_t k = 0;
        double acc = weights[0];
        while (u >= acc && k + 1 < weights.size()) acc += weights[++k];
        return numerics::sigmoid(means[k] + stddevs[k] * rng.normal());
    }
    std::pair<double, double> support() const { return {0.0, 1.0}; }
};

/// N(mu, sigma^2) conditioned on [0, 1].
struct TruncatedNormal {
    double mu;
    double sigma;
    double mass = 1.0;  // Phi((1-mu)/sigma) - Phi(-mu/sigma)
    double cached_mean = 0.0;

    double z(double p) const { return (p - mu) / sigma; }
    double pdf(double p) const {
        if (p < 0.0 || p > 1.0) return 0.0;
        return numerics::normal_pdf(z(p)) / (sigma * mass);
    }
    double cdf(double p) const {
        if (p <= 0.0) return 0.0;
        if (p >= 1.0) return 1.0;
        return std::clamp((numerics::normal_sf(z(0.0)) - numerics::normal_sf(z(p))) / mass, 0.0, 1.0);
    }
    double cdf_left(double p) const { return cdf(p); }
    double survival(double p) const {
        if (p <= 0.0) return 1.0;
        if (p >= 1.0) return 0.0;
        return std::clamp((numerics::normal_sf(z(p)) - numerics::normal_sf(z(1.0))) / mass, 0.0, 1.0);
    }
    // int_a^1 (p - a) f  =  [sigma (phi(z_a) - phi(z_1)) + (mu - a)(Phi(z_1) - Phi(z_a))] / mass
    double tail_above(double a) const {
        a = std::clamp(a, 0.0, 1.0);
        const double za = z(a), z1 = z(1.0);
        const double v = sigma * (numerics::normal_pdf(za) - numerics::normal_pdf(z1)) +
                         (mu - a) * (numerics::normal_sf(za) - numerics::normal_sf(z1));
        return std::max(v / mass, 0.0);
    }
    double tail_below(double x) const {
        x = std::clamp(x, 0.0, 1.0);
        const double z0 = z(0.0), zx = z(x);
        const double v = (x - mu) * (numerics::normal_sf(z0) - numerics::normal_sf(zx)) +
                         sigma * (numerics::normal_pdf(zx) - numerics::normal_pdf(z0));
        return std::max(v / mass, 0.0);
    }
    double mean() const { return cached_mean; }
    double sample(RandomStream& rng) const {
        const double lo = numerics::normal_cdf(z(0.0));
        const double target = lo + rng.uniform_open() * mass;
        const double zq = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * target);
        return std::clamp(mu + sigma * zq, 0.0, 1.0);
    }
    std::pair<double, double> support() const { return {0.0, 1.0}; }
};

/// Exponential(lambda) conditioned on [0, 1]. Closed forms throughout.
struct TruncatedExponential {
    double lambda;

    double norm() const { return -std::expm1(-lambda); }  // 1 - e^{-lambda}
    double pdf(double p) const {
        if (p < 0.0 || p > 1.0) return 0.0;
        return lambda * std::exp(-lambda * p) / norm();
    }
    double cdf(double p) const {
        if (p <= 0.0) return 0.0;
        if (p >= 1.0) return 1.0;
        return -std::expm1(-lambda * p) / norm();
    }
    double cdf_left(double p) const { return cdf(p); }
    double survival(double p) const {
        if (p <= 0.0) return 1.0;
        if (p >= 1.0) return 0.0;
        return (std::exp(-lambda * p) - std::exp(-lambda)) / norm();
    }
    double tail_above(double a) const {
        a = std::clamp(a, 0.0, 1.0);
        const double e1 = std::exp(-lambda);
        return ((std::exp(-lambda * a) - e1) / lambda - e1 * (1.0 - a)) / norm();
    }
    double tail_below(double x) const {
        x = std::clamp(x, 0.0, 1.0);
        return (x + std::expm1(-lambda * x) / lambda) / norm();
    }
    double mean() const { return tail_above(0.0); }
    double sample(RandomStream& rng) const {
        return std::min(1.0, -std::log1p(-rng.uniform() * norm()) / lambda);
    }
    std::pair<double, double> support() const { return {0.0, 1.0}; }
};

struct PointMass {
    double p0;

    double pdf(double p) const { return p == p0 ? std::numeric_limits<double>::infinity() : 0.0; }
    double cdf(double p) const { return p >= p0 ? 1.0 : 0.0; }
    double cdf_left(double p) const { return p > p0 ? 1.0 : 0.0; }
    double tail_above(double a) const { return std::max(p0 - a, 0.0); }
    double tail_below(double x) const { return std::max(x - p0, 0.0); }
    double mean() const { return p0; }
    double sample(RandomStream&) const { return p0; }
    std::pair<double, double> support() const { return {p0, p0}; }
};

/// Equal-weight atoms at the given samples. Prefix sums make every tail
/// integral O(log n).
struct Empirical {
    std::vector<double> sorted;
    std::vector<double> prefix;  // prefix[k] = sum of the k smallest samples

    double n() const { return static_cast<double>(sorted.size()); }
    double pdf(double p) const {
        return std::binary_search(sorted.begin(), sorted.end(), p)
                   ? std::numeric_limits<double>::infinity()
                   : 0.0;
    }
    double cdf(double p) const {
        return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), p) - sorted.begin()) / n();
    }
    double cdf_left(double p) const {
        return static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), p) - sorted.begin()) / n();
    }
    double tail_above(double a) const {
        const auto k = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), a) - sorted.begin());
        const double count = static_cast<double>(sorted.size() - k);
        return ((prefix.back() - prefix[k]) - a * count) / n();
    }
    double tail_below(double x) const {
        const auto k = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
        return (x * static_cast<double>(k) - prefix[k]) / n();
    }
    double mean() const { return prefix.back() / n(); }
    double sample(RandomStream& rng) const { return sorted[rng.index(sorted.size())]; }
    std::pair<double, double> support() const { return {sorted.front(), sorted.back()}; }
};

}  // namespace laws

/// A bettor-belief law on [0, 1]. Immutable after construction; sampling takes
/// a caller-owned random stream.
class BeliefDistribution {
public:
    using Law = std::variant<laws::TwoBlock, laws::SigmoidGaussianMixture, laws::Uniform,
                             laws::TruncatedNormal, laws::TruncatedExponential, laws::PointMass,
                             laws::Empirical>;

    static BeliefDistribution two_block(double m, double delta1, double delta2) {
        if (!(m > 0.5 && m < 1.0)) throw DomainError("two_block: m must lie in (0.5, 1)");
        const double cap = std::min(m - 0.5, 1.0 - m);
        // Allow the boundary case delta == cap despite rounding in m - 0.5.
        const double slack = 1e-12;
        if (!(delta1 > 0.0 && delta1 <= cap + slack) || !(delta2 > 0.0 && delta2 <= cap + slack)) {
            throw DomainError("two_block: deltas must lie in (0, min(m - 0.5, 1 - m)]");
        }
        return BeliefDistribution(laws::TwoBlock{m, delta1, delta2});
    }

    static BeliefDistribution sigmoid_gaussian_mixture(std::vector<double> weights,
                                                       std::vector<double> means,
                                                       std::vector<double> stddevs) {
        if (weights.empty() || weights.size() != means.size() || weights.size() != stddevs.size()) {
            throw DomainError("sigmoid_gaussian_mixture: weights, means and stddevs must be non-empty and aligned");
        }
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (!(weights[i] >= 0.0 && weights[i] <= 1.0)) {
                throw DomainError("sigmoid_gaussian_mixture: weights must be probabilities");
            }
            if (!(stddevs[i] > 0.0)) throw DomainError("sigmoid_gaussian_mixture: stddevs must be positive");
            if (!std::isfinite(means[i])) throw DomainError("sigmoid_gaussian_mixture: means must be finite");
        }
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9) throw DomainError("sigmoid_gaussian_mixture: weights must sum to 1");
        laws::SigmoidGaussianMixture law{std::move(weights), std::move(means), std::move(stddevs)};
        law.cached_mean = law.tail_above(0.5) + 0.5 - law.tail_below(0.5);
        return BeliefDistribution(std::move(law));
    }

    static BeliefDistribution uniform(double lo = 0.0, double hi = 1.0) {
        if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) throw DomainError("uniform: need 0 <= lo < hi <= 1");
        return BeliefDistribution(laws::Uniform{lo, hi});
    }

    static BeliefDistribution truncated_normal(double mu, double sigma) {
        if (!std::isfinite(mu) || !(sigma > 0.0)) throw DomainError("truncated_normal: need finite mu, sigma > 0");
        laws::TruncatedNormal law{mu, sigma};
        law.mass = numerics::normal_sf(law.z(0.0)) - numerics::normal_sf(law.z(1.0));
        if (!(law.mass > 0.0)) throw DomainError("truncated_normal: no mass on [0, 1]");
        law.cached_mean = law.tail_above(0.0);
        return BeliefDistribution(law);
    }

    static BeliefDistribution truncated_exponential(double lambda) {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("truncated_exponential: lambda must be positive");
        return BeliefDistribution(laws::TruncatedExponential{lambda});
    }

    static BeliefDistribution point_mass(double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("point_mass: p must lie in [0, 1]");
        return BeliefDistribution(laws::PointMass{p});
    }

    static BeliefDistribution empirical(std::vector<double> samples) {
        if (samples.empty()) throw DomainError("empirical: need at least one sample");
        for (double s : samples) {
            if (!(s >= 0.0 && s <= 1.0)) throw DomainError("empirical: samples must lie in [0, 1]");
        }
        std::sort(samples.begin(), samples.end());
        std::vector<double> prefix(samples.size() + 1, 0.0);
        std::partial_sum(samples.begin(), samples.end(), prefix.begin() + 1);
        return BeliefDistribution(laws::Empirical{std::move(samples), std::move(prefix)});
    }

    const Law& law() const noexcept { return law_; }

    std::string_view kind() const {
        static constexpr std::string_view names[] = {"two_block",          "sigmoid_gaussian_mixture",
                                                     "uniform",            "truncated_normal",
                                                     "truncated_exponential", "point_mass",
                                                     "empirical"};
        return names[law_.index()];
    }

    double pdf(double p) const {
        return std::visit([p](const auto& l) { return l.pdf(p); }, law_);
    }
    double cdf(double p) const {
        return std::visit([p](const auto& l) { return l.cdf(p); }, law_);
    }
    /// P(p < x), the left limit of the cdf. Differs from cdf only at atoms.
    double cdf_left(double x) const {
        return std::visit([x](const auto& l) { return l.cdf_left(x); }, law_);
    }
    /// P(p > x), computed directly where a cancellation-free form exists.
    double survival(double x) const {
        return std::visit(
            [x](const auto& l) -> double {
                if constexpr (requires { l.survival(x); }) {
                    return l.survival(x);
                } else {
                    return 1.0 - l.cdf(x);
                }
            },
            law_);
    }
    double mean() const {
        return std::visit([](const auto& l) { return l.mean(); }, law_);
    }
    double sample(RandomStream& rng) const {
        return std::visit([&rng](const auto& l) { return l.sample(rng); }, law_);
    }
    /// Smallest closed interval carrying all the mass.
    std::pair<double, double> support() const {
        return std::visit([](const auto& l) { return l.support(); }, law_);
    }
    /// True when the density is positive on all of (0, 1).
    bool has_full_support() const {
        return std::visit(
            [](const auto& l) {
                using L = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<L, laws::Uniform>) {
                    return l.lo == 0.0 && l.hi == 1.0;
                } else {
                    return std::is_same_v<L, laws::SigmoidGaussianMixture> ||
                           std::is_same_v<L, laws::TruncatedNormal> ||
                           std::is_same_v<L, laws::TruncatedExponential>;
                }
            },
            law_);
    }

    /// E[(p - a)+].
    double tail_expectation_above(double a) const {
        return std::visit([a](const auto& l) { return l.tail_above(a); }, law_);
    }
    /// E[(q - b)+] with q = 1 - p, i.e. E[(1 - b - p)+].
    double tail_expectation_below(double b) const {
        const double x = 1.0 - b;
        return std::visit([x](const auto& l) { return l.tail_below(x); }, law_);
    }

    /// E[p | p >= a] = a + E[(p - a)+] / (1 - F(a)).
    double conditional_tail_mean(double a) const { return a + mean_residual_life(a); }

    /// E[p | p >= a] - a.
    double mean_residual_life(double a) const {
        const double tail_prob = survival(a);
        if (!(tail_prob > 0.0)) throw UndefinedTail("conditional tail mean: P(p > a) = 0");
        return tail_expectation_above(a) / tail_prob;
    }

    /// E[q | q >= b] with q = 1 - p: the mirror of conditional_tail_mean used
    /// by the L-side optimality condition.
    double conditional_tail_mean_q(double b) const {
        const double tail_prob = cdf_left(1.0 - b);
        if (!(tail_prob > 0.0)) throw UndefinedTail("conditional tail mean: P(q > b) = 0");
        return b + tail_expectation_below(b) / tail_prob;
    }

    /// inf { p : F(p) >= u }.
    double quantile(double u) const {
        if (u <= 0.0) return support().first;
        if (const auto* e = std::get_if<laws::Empirical>(&law_)) {
            const auto k = static_cast<std::size_t>(std::ceil(u * e->n()));
            return e->sorted[std::clamp<std::size_t>(k, 1, e->sorted.size()) - 1];
        }
        double lo = 0.0;
        double hi = 1.0;
        for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (cdf(mid) >= u) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return hi;
    }

    /// CVaR_alpha(p), the mean of the upper alpha-tail, in the
    /// rho + E[(p - rho)+] / alpha form evaluated at the (1 - alpha)-quantile.
    double cvar_upper(double alpha) const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("cvar_upper: alpha must lie in (0, 1]");
        const double rho = quantile(1.0 - alpha);
        return rho + tail_expectation_above(rho) / alpha;
    }

    /// CVaR_beta(q) for q = 1 - p.
    double cvar_upper_q(double beta) const {
        if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("cvar_upper_q: beta must lie in (0, 1]");
        const double rho = 1.0 - quantile(beta);
        return rho + tail_expectation_below(rho) / beta;
    }

private:
    explicit BeliefDistribution(Law law) : law_(std::move(law)) {}

    Law law_;
};

enum class Dominance { Dominates, DominatedBy, Incomparable };

inline std::string_view to_string(Dominance d) {
    switch (d) {
        case Dominance::Dominates: return "dominates";
        case Dominance::DominatedBy: return "dominated_by";
        case Dominance::Incomparable: return "incomparable";
    }
    return "incomparable";
}

/// Second-order stochastic dominance of `first` over `second`, comparing the
/// integrated cdfs S_i(z) on a trapezoid grid. Strict inequality with 1e-12
/// slack at every interior grid point.
inline Dominance sosd_compare(const BeliefDistribution& first, const BeliefDistribution& second,
                              double grid_step = 1e-3) {
    if (!(grid_step > 0.0 && grid_step <= 0.01)) throw DomainError("sosd_compare: grid_step must lie in (0, 0.01]");
    if (std::abs(first.mean() - second.mean()) > 1e-9) {
        throw MeanMismatch("sosd_compare: laws have different means");
    }
    constexpr double slack = 1e-12;
    const auto n = static_cast<std::size_t>(std::llround(1.0 / grid_step));
    double s1 = 0.0;
    double s2 = 0.0;
    double f1_prev = first.cdf(0.0);
    double f2_prev = second.cdf(0.0);
    bool first_below = true;
    bool second_below = true;
    for (std::size_t k = 1; k < n; ++k) {
        const double z = static_cast<double>(k) / static_cast<double>(n);
        const double f1 = first.cdf(z);
        const double f2 = second.cdf(z);
        s1 += 0.5 * grid_step * (f1_prev + f1);
        s2 += 0.5 * grid_step * (f2_prev + f2);
        f1_prev = f1;
        f2_prev = f2;
        first_below = first_below && (s1 < s2 - slack);
        second_below = second_below && (s2 < s1 - slack);
    }
    if (first_below) return Dominance::Dominates;
    if (second_below) return Dominance::DominatedBy;
    return Dominance::Incomparable;
}

}  // namespace bookie
