#pragma once

#include <cmath>
#include <optional>

#include "bookie/error.hpp"

namespace bookie {

/// The bookmaker's quote: a is the price of a unit contract on R, b on L.
/// Overround a + b - 1 must be non-negative; a + b < 1 admits arbitrage.
struct Prices {
    double a;
    double b;

    /// Rounding slack accepted on the overround constraint.
    static constexpr double kOverroundSlack = 1e-12;

    static Prices checked(double a, double b) {
        if (!(a > 0.0 && a < 1.0) || !(b > 0.0 && b < 1.0)) {
            throw DomainError("prices must lie in (0, 1)");
        }
        if (a + b < 1.0 - kOverroundSlack) throw DomainError("prices must satisfy a + b >= 1");
        return {a, b};
    }

    static Prices fair(double a) { return checked(a, 1.0 - a); }

    double overround() const { return a + b - 1.0; }

    friend bool operator==(const Prices&, const Prices&) = default;
};

/// Bookmaker's subjective probability g of R, optionally bracketed by an
/// imprecise interval [lower, upper].
struct BookmakerBelief {
    double g;
    std::optional<double> lower;
    std::optional<double> upper;

    BookmakerBelief(double g_) : g(g_) {  // NOLINT(google-explicit-constructor)
        if (!(g > 0.0 && g < 1.0)) throw DomainError("bookmaker belief g must lie in (0, 1)");
    }

    BookmakerBelief(double g_, double lower_, double upper_) : BookmakerBelief(g_) {
        if (!(lower_ > 0.0 && lower_ <= g && g <= upper_ && upper_ < 1.0)) {
            throw DomainError("imprecise belief must satisfy 0 < g- <= g <= g+ < 1");
        }
        lower = lower_;
        upper = upper_;
    }

    bool imprecise() const { return lower.has_value(); }
};

}  // namespace bookie
