#pragma once

// Thin wrappers over Boost.Math so the rest of the library speaks in plain
// doubles and closed intervals.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>

#include "bookie/error.hpp"

namespace bookie::numerics {

inline constexpr double kQuadratureTolerance = 1e-12;

/// Adaptive Gauss-Kronrod integral of f over [lo, hi]. The tolerance is
/// relative to the L1 norm of the integrand, which keeps tails accurate when
/// the integral itself is tiny.
template <class F>
double integrate(F&& f, double lo, double hi, double rel_tol = kQuadratureTolerance) {
    if (!(hi > lo)) return 0.0;
    double error = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        std::forward<F>(f), lo, hi, 15, rel_tol, &error);
}

struct ScalarOptimum {
    double x;
    double value;
};

/// Maximise a unimodal f on [lo, hi] with Brent's method (golden section with
/// parabolic steps).
template <class F>
ScalarOptimum maximize(F&& f, double lo, double hi) {
    constexpr int bits = std::numeric_limits<double>::digits / 2;
    std::uintmax_t iters = 500;
    auto neg = [&](double x) { return -f(x); };
    auto [x, v] = boost::math::tools::brent_find_minima(neg, lo, hi, bits, iters);
    return {x, -v};
}

/// Root of f on a sign-changing bracket [lo, hi], located to an interval of
/// width at most x_tol.
template <class F>
double find_root(F&& f, double lo, double hi, double x_tol = 1e-12) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (std::signbit(flo) == std::signbit(fhi)) {
        throw SolverError("find_root: interval does not bracket a sign change");
    }
    std::uintmax_t iters = 200;
    auto tol = [x_tol](double a, double b) { return std::abs(b - a) <= x_tol; };
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (a + b);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }
inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace bookie::numerics
