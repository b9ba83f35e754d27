#include <gtest/gtest.h>

#include <cmath>

#include "bookie/agents.hpp"
#include "bookie/random.hpp"
#include "oracles.hpp"

using namespace bookie;

TEST(Kelly, WorkedExamples) {
    const Prices pr{0.6, 0.7};
    auto r = kelly_bet({0.8, 1.0}, pr);
    EXPECT_EQ(r.side, Side::ForR);
    EXPECT_NEAR(r.stake, 0.5, 1e-12);
    auto l = kelly_bet({0.2, 1.0}, pr);
    EXPECT_EQ(l.side, Side::ForL);
    EXPECT_NEAR(l.stake, 1.0 / 3.0, 1e-12);
    auto n = kelly_bet({0.5, 1.0}, pr);
    EXPECT_EQ(n.side, Side::NoBet);
    EXPECT_EQ(n.stake, 0.0);
}

TEST(Kelly, TiesAreNoBet) {
    EXPECT_EQ(kelly_bet({0.6, 1.0}, {0.6, 0.7}).side, Side::NoBet);
    EXPECT_EQ(kelly_bet({0.3, 1.0}, {0.6, 0.7}).side, Side::NoBet);
}

TEST(Kelly, CertainBettorStakeIsCapped) {
    const auto r = kelly_bet({1.0, 2.0}, {0.6, 0.7});
    EXPECT_EQ(r.side, Side::ForR);
    EXPECT_LT(r.stake, 2.0);
    EXPECT_NEAR(r.stake, 2.0, 1e-11);
}

TEST(Kelly, StakeIsLinearInWealth) {
    RandomStream rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double a = 0.3 + 0.69 * rng.uniform();
        const double b = std::max(1.0 - a, 0.01) + (0.99 - std::max(1.0 - a, 0.01)) * rng.uniform();
        const double p = rng.uniform();
        const double w = 0.1 + 5.0 * rng.uniform();
        const auto one = kelly_bet({p, w}, {a, b});
        const auto two = kelly_bet({p, 2.0 * w}, {a, b});
        EXPECT_EQ(one.side, two.side);
        EXPECT_EQ(two.stake, 2.0 * one.stake);
    }
}

TEST(Kelly, StakeVanishesAtThePrice) {
    const Prices pr{0.6, 0.7};
    EXPECT_LT(kelly_bet({0.6 + 1e-9, 1.0}, pr).stake, 1e-8);
    EXPECT_LT(kelly_bet({0.3 - 1e-9, 1.0}, pr).stake, 1e-8);
}

TEST(BettorUtility, Values) {
    const Prices pr{0.6, 0.7};
    EXPECT_NEAR(bettor_utility({0.8, 3.0}, pr, 0.0, Side::ForR), std::log(3.0), 1e-15);
    const double at = bettor_utility({0.8, 1.0}, pr, 0.5, Side::ForR);
    EXPECT_NEAR(at, 0.8 * std::log(1.0 + (0.4 / 0.6) * 0.5) + 0.2 * std::log(0.5), 1e-15);
    EXPECT_GE(at, bettor_utility({0.8, 1.0}, pr, 0.49, Side::ForR));
    EXPECT_GE(at, bettor_utility({0.8, 1.0}, pr, 0.51, Side::ForR));
    EXPECT_THROW(bettor_utility({0.8, 1.0}, pr, 1.0, Side::ForR), DomainError);
}

TEST(BettorUtility, KellyMatchesGoldenSectionOracle) {
    RandomStream rng(17);
    for (int i = 0; i < 1000; ++i) {
        const double a = 0.05 + 0.9 * rng.uniform();
        const double lo_b = 1.0 - a;
        const double b = lo_b + (0.95 - lo_b) * rng.uniform();
        if (b <= 0.0 || b >= 1.0) continue;
        const BettorDraw d{rng.uniform(), 0.5 + 2.0 * rng.uniform()};
        const Prices pr{a, b};
        const auto bet = kelly_bet(d, pr);
        const double cap = d.wealth * (1.0 - 1e-9);
        auto best_on = [&](Side s) {
            return oracle::golden_max([&](double v) { return bettor_utility(d, pr, v, s); }, 0.0, cap, 1e-13).second;
        };
        const double best_r = std::max(best_on(Side::ForR), std::log(d.wealth));
        const double best_l = std::max(best_on(Side::ForL), std::log(d.wealth));
        if (bet.side == Side::NoBet) {
            EXPECT_NEAR(best_r, std::log(d.wealth), 1e-9);
            EXPECT_NEAR(best_l, std::log(d.wealth), 1e-9);
            continue;
        }
        const double achieved = bettor_utility(d, pr, bet.stake, bet.side);
        const double chosen = bet.side == Side::ForR ? best_r : best_l;
        const double other = bet.side == Side::ForR ? best_l : best_r;
        EXPECT_NEAR(achieved, chosen, 1e-9);
        EXPECT_LE(other, achieved + 1e-9);
    }
}
