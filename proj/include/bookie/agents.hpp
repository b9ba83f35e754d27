#pragma once

// Kelly bettors: log-wealth maximising responses to a quoted price pair.

#include <cmath>
#include <string_view>

#include "bookie/error.hpp"
#include "bookie/market_types.hpp"

namespace bookie {

enum class Side { ForR, ForL, NoBet };

inline std::string_view to_string(Side s) {
    switch (s) {
        case Side::ForR: return "R";
        case Side::ForL: return "L";
        case Side::NoBet: return "none";
    }
    return "none";
}

/// One arriving bettor: belief in R and wealth. The belief in L is 1 - belief.
struct BettorDraw {
    double belief;
    double wealth;
};

struct BetOutcome {
    Side side = Side::NoBet;
    double stake = 0.0;
};

/// Stakes for p == 1 (or q == 1) are capped just below the bettor's wealth so
/// that downstream wealth accounting stays finite.
inline constexpr double kFullStakeCap = 1.0 - 1e-12;

/// Kelly rule: bet w (p - a) / (1 - a) on R when p > a, w (q - b) / (1 - b) on
/// L when q > b, otherwise nothing. Ties resolve to NoBet.
inline BetOutcome kelly_bet(const BettorDraw& draw, const Prices& prices) {
    const double p = draw.belief;
    const double q = 1.0 - p;
    if (p > prices.a) {
        const double fraction = std::min((p - prices.a) / (1.0 - prices.a), kFullStakeCap);
        return {Side::ForR, draw.wealth * fraction};
    }
    if (q > prices.b) {
        const double fraction = std::min((q - prices.b) / (1.0 - prices.b), kFullStakeCap);
        return {Side::ForL, draw.wealth * fraction};
    }
    return {Side::NoBet, 0.0};
}

/// Expected log wealth after staking `stake` on `side`:
///   phi_R(v) = p log(w + v (1 - a) / a) + q log(w - v), and symmetrically for L.
inline double bettor_utility(const BettorDraw& draw, const Prices& prices, double stake, Side side) {
    if (!(stake >= 0.0 && stake < draw.wealth)) {
        throw DomainError("bettor_utility: stake must lie in [0, wealth)");
    }
    const double p = draw.belief;
    const double q = 1.0 - p;
    const double w = draw.wealth;
    // Zero-probability branches contribute nothing even when their log is -inf.
    auto term = [](double prob, double wealth_after) {
        return prob == 0.0 ? 0.0 : prob * std::log(wealth_after);
    };
    switch (side) {
        case Side::ForR:
            return term(p, w + stake * (1.0 - prices.a) / prices.a) + term(q, w - stake);
        case Side::ForL:
            return term(q, w + stake * (1.0 - prices.b) / prices.b) + term(p, w - stake);
        case Side::NoBet:
            break;
    }
    throw DomainError("bettor_utility: side must be R or L");
}

}  // namespace bookie
