#include <gtest/gtest.h>

#include <cmath>

#include "bookie/beliefs.hpp"
#include "bookie/policies.hpp"
#include "bookie/random.hpp"
#include "oracles.hpp"

using namespace bookie;

TEST(EstimateBelief, InvertsKelly) {
    EXPECT_NEAR(estimate_belief({0.6, 0.7}, {Side::ForR, 0.5, 1.0}), 0.8, 1e-15);
    EXPECT_NEAR(estimate_belief({0.6, 0.7}, {Side::ForL, 1.0 / 3.0, 1.0}), 0.2, 1e-15);
    EXPECT_EQ(estimate_belief({0.6, 0.7}, {Side::ForR, 0.0, 1.0}), 0.6);
    EXPECT_THROW(estimate_belief({0.6, 0.7}, {Side::NoBet, 0.0, 1.0}), NoBetObserved);
}

TEST(EstimateBelief, UnbiasedForTailMean) {
    const auto d = BeliefDistribution::sigmoid_gaussian_mixture({0.25, 0.75}, {2.0, -1.0}, {1.0, 1.0});
    const Prices pr{0.7, 0.68};
    RandomStream rng(4);
    double s = 0.0, s2 = 0.0;
    int n = 0;
    while (n < 100000) {
        const BettorDraw draw{d.sample(rng), 1.0};
        const auto bet = kelly_bet(draw, pr);
        if (bet.side != Side::ForR) continue;
        const double p_hat = estimate_belief(pr, {bet.side, bet.stake, 1.0});
        s += p_hat;
        s2 += p_hat * p_hat;
        ++n;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, d.conditional_tail_mean(pr.a), 3.0 * se);
}

TEST(Schedule, DefaultValues) {
    const auto s = sa_default_schedule();
    EXPECT_EQ(s.gamma, 300.0);
    EXPECT_EQ(s.offset, 5000.0);
    EXPECT_DOUBLE_EQ(s.at(0), 0.06);
    EXPECT_DOUBLE_EQ(s.at(5000), 0.03);
}

TEST(Sa, HandUpdate) {
    // gamma / offset = 0.1 at t = 0
    SaPolicy sa(0.5, {0.7, 0.6}, {0.1, 1.0});
    const double stake = (0.9 - 0.7) / (1.0 - 0.7);  // p_hat = 0.9 at unit wealth
    sa.observe({Side::ForR, stake, 1.0});
    EXPECT_NEAR(sa.quote().a, 0.7 - 0.1 * (0.7 + 0.7 * 0.3 * 0.2 / 0.29 - 0.9), 1e-14);
    EXPECT_NEAR(sa.quote().a, 0.705517, 1e-6);
    EXPECT_EQ(sa.quote().b, 0.6);
    EXPECT_EQ(sa.updates(), 1);
}

TEST(Sa, FixedPointAndNoBet) {
    const double a = 0.72;
    SaPolicy sa(0.5, {a, 0.6}, {0.1, 1.0});
    const double target = a + foc_G(a, 0.5);
    sa.observe({Side::ForR, (target - a) / (1.0 - a), 1.0});
    EXPECT_NEAR(sa.quote().a, a, 1e-15);
    const Prices before = sa.quote();
    sa.observe({Side::NoBet, 0.0, 1.0});
    EXPECT_EQ(sa.quote(), before);
    EXPECT_EQ(sa.updates(), 1);
}

TEST(Sa, LSideUsesMirroredBelief) {
    SaPolicy sa(0.3, {0.5, 0.8}, {0.1, 1.0});
    // ForL at b = 0.8 with stake v: p_hat = 0.2 (1 - v)
    const double v = 0.25;
    const double p_hat = 0.2 * (1.0 - v);
    sa.observe({Side::ForL, v, 1.0});
    EXPECT_NEAR(sa.quote().b, 0.8 - 0.1 * (0.8 + foc_G(0.8, 0.7) - (1.0 - p_hat)), 1e-14);
    EXPECT_EQ(sa.quote().a, 0.5);
}

TEST(Sa, CounterModes) {
    SaPolicy shared(0.5, {0.7, 0.7}, {1.0, 10.0}, false);
    SaPolicy split(0.5, {0.7, 0.7}, {1.0, 10.0}, true);
    for (auto* p : {&shared, &split}) {
        p->observe({Side::ForR, 0.1, 1.0});
        p->observe({Side::ForL, 0.1, 1.0});
    }
    // The second (L) update used eta = 1/11 when shared, 1/10 when split.
    EXPECT_NE(shared.quote().b, split.quote().b);
    EXPECT_EQ(shared.quote().a, split.quote().a);
}

TEST(Sa, ExtremeEstimatesNeverReachTheClamp) {
    // With eta <= min(1, 1/L_G) the update itself keeps a in [g, 1); the clamp is a backstop.
    SaPolicy sa(0.5, {0.51, 0.99}, {0.9, 1.0});
    for (int i = 0; i < 1000; ++i) {
        sa.observe({Side::ForR, i % 2 ? 0.0 : 5.0, 1.0});  // p_hat = a, then clipped to 1
        sa.observe({Side::ForL, i % 2 ? 5.0 : 0.0, 1.0});
        ASSERT_GE(sa.quote().a, 0.5);
        ASSERT_LT(sa.quote().a, 1.0);
        ASSERT_GE(sa.quote().b, 0.5);
        ASSERT_LT(sa.quote().b, 1.0);
    }
    EXPECT_EQ(sa.clamp_count(), 0);
}

TEST(Sa, RejectsOversizedSteps) {
    EXPECT_THROW(SaPolicy(0.5, {0.6, 0.6}, {10.0, 1.0}), DomainError);
    EXPECT_THROW(SaPolicy(0.5, {0.4, 0.6}), DomainError);
}

TEST(Sa, PricesStayContained) {
    const auto d = BeliefDistribution::sigmoid_gaussian_mixture({0.25, 0.75}, {2.0, -1.0}, {1.0, 1.0});
    SaPolicy sa(0.5, {0.9, 0.55});
    RandomStream rng(8);
    for (int t = 0; t < 1000000; ++t) {
        const BettorDraw draw{d.sample(rng), 1.0};
        const auto bet = kelly_bet(draw, sa.quote());
        sa.observe({bet.side, bet.stake, 1.0});
        ASSERT_GE(sa.quote().a, 0.5);
        ASSERT_LT(sa.quote().a, 1.0);
        ASSERT_GE(sa.quote().b, 0.5);
        ASSERT_LT(sa.quote().b, 1.0);
    }
    EXPECT_EQ(sa.clamp_count(), 0);
    EXPECT_LT(std::abs(foc_residual_r(d, 0.5, sa.quote().a)), 0.02);
    EXPECT_LT(std::abs(foc_residual_l(d, 0.5, sa.quote().b)), 0.02);
}

TEST(Sa, ImpreciseBeliefShiftsFloors) {
    SaPolicy sa(BookmakerBelief(0.5, 0.4, 0.6), {0.6, 0.6});
    sa.observe({Side::ForR, 0.0, 1.0});
    EXPECT_EQ(sa.quote().a, 0.6);
    EXPECT_THROW(SaPolicy(BookmakerBelief(0.5, 0.4, 0.6), {0.55, 0.6}), DomainError);
}

TEST(Ftl, FirstUpdate) {
    FtlPolicy ftl(0.5, 0.5, 0.05);
    // Fair price 0.5, stake 0.6 on R at unit wealth: p_hat = 0.5 + 0.5 * 0.6 = 0.8
    ftl.observe({Side::ForR, 0.6, 1.0});
    EXPECT_NEAR(ftl.running_mean(), 0.8, 1e-15);
    EXPECT_NEAR(ftl.quote().a, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(ftl.quote().a + ftl.quote().b, 1.0, 1e-15);
}

TEST(Ftl, ConstantEstimatesAreAFixedPoint) {
    FtlPolicy ftl(0.5, 0.5);
    for (int i = 0; i < 50; ++i) {
        const double a = ftl.quote().a;
        // Stake chosen so that p_hat = 0.3 at the current price.
        if (a > 0.3) {
            ftl.observe({Side::ForL, 1.0 - 0.3 / a, 1.0});
        } else {
            ftl.observe({Side::ForR, (0.3 - a) / (1.0 - a), 1.0});
        }
        EXPECT_NEAR(ftl.running_mean(), 0.3, 1e-13);
    }
    EXPECT_NEAR(ftl.quote().a, solve_fair_optimal(0.3, 0.5), 1e-13);
}

TEST(Ftl, ClipsRunningMean) {
    FtlPolicy ftl(0.5, 0.5, 0.05);
    // Overstated stake: p_hat = 0.5 + 0.5 * 1.4 = 1.2
    ftl.observe({Side::ForR, 1.4, 1.0});
    EXPECT_NEAR(ftl.running_mean(), 1.2, 1e-15);
    EXPECT_NEAR(ftl.quote().a, solve_fair_optimal(0.95, 0.5), 1e-15);
    ftl.observe({Side::NoBet, 0.0, 1.0});
    EXPECT_EQ(ftl.updates(), 1);
}

TEST(RiskBalance, HandUpdate) {
    RiskBalancePolicy rb({0.5, 0.5}, {0.1, 1.0});
    rb.set_totals(2.0, 1.0);
    rb.observe({Side::ForR, 0.0, 1.0});
    EXPECT_NEAR(rb.quote().a, 0.6, 1e-15);
    EXPECT_NEAR(rb.quote().b, 0.4, 1e-15);
}

TEST(RiskBalance, BalancedTotalsLeavePricesAlone) {
    RiskBalancePolicy rb({0.55, 0.6}, {0.1, 1.0});
    rb.set_totals(1.0, 1.0);
    rb.observe({Side::NoBet, 0.0, 1.0});
    EXPECT_EQ(rb.quote(), (Prices{0.55, 0.6}));
}

TEST(RiskBalance, OneSidedFlowRaisesPriceAndProjects) {
    RiskBalancePolicy rb({0.5, 0.5}, {0.05, 1.0});
    double prev = rb.quote().a;
    for (int i = 0; i < 200; ++i) {
        rb.observe({Side::ForR, 0.3, 1.0});
        EXPECT_GE(rb.quote().a, prev);
        EXPECT_GE(rb.quote().a + rb.quote().b, 1.0 - 1e-15);
        EXPECT_GT(rb.quote().b, 0.0);
        prev = rb.quote().a;
    }
    EXPECT_NEAR(rb.quote().a, 1.0 - 1e-9, 1e-15);
}

TEST(Lmsr, NoEdgeNoTrade) {
    LmsrPolicy m(100.0, 0.5);
    const auto out = m.trade({0.5, 1.0});
    EXPECT_EQ(out.side, Side::NoBet);
    EXPECT_EQ(m.shares_r(), 0.0);
    EXPECT_EQ(m.shares_l(), 0.0);
}

TEST(Lmsr, SmallTradeLinearisation) {
    for (double beta : {1e3, 1e4, 1e5}) {
        LmsrPolicy m(beta, 0.5);
        const auto out = m.trade({0.8, 1.0});
        EXPECT_EQ(out.side, Side::ForR);
        const double moved = m.price_r() - 0.5;
        const double linear = 1.0 * (0.8 - 0.5) / beta;
        EXPECT_NEAR(moved / linear, 1.0, 20.0 / beta) << beta;
        EXPECT_NEAR(out.stake, (0.8 - 0.5) / 0.5, 1e-2);  // Kelly stake at the opening price
    }
}

TEST(Lmsr, TradeMaximisesLogWealth) {
    const double beta = 50.0, p = 0.75, w = 2.0, pi = 0.4;
    LmsrPolicy m(beta, pi);
    const auto out = m.trade({p, w});
    const double x = m.shares_r() - beta * std::log(pi / (1 - pi));
    auto utility = [&](double s) {
        const double c = beta * std::log(1 - pi + pi * std::exp(s / beta));
        return p * std::log(w - c + s) + (1 - p) * std::log(w - c);
    };
    const auto [best, v] = oracle::golden_max(utility, 0.0, 20.0, 1e-12);
    EXPECT_NEAR(x, best, 1e-6);
    EXPECT_NEAR(out.stake, beta * std::log(1 - pi + pi * std::exp(x / beta)), 1e-12);
}

TEST(Lmsr, QuotesSumToOneAndTrackTheCrowd) {
    const auto d = BeliefDistribution::truncated_normal(0.35, 0.15);
    LmsrPolicy m(100.0);
    RandomStream rng(12);
    for (int t = 0; t < 50000; ++t) {
        m.trade({d.sample(rng), 1.0});
        const auto q = m.quote();
        ASSERT_NEAR(q.a + q.b, 1.0, 1e-12);
    }
    EXPECT_NEAR(m.price_r(), d.mean(), 0.05);
}

TEST(Policy, StepDispatchesAndIsDeterministic) {
    const auto d = BeliefDistribution::uniform();
    auto run = [&] {
        AnyPolicy p = SaPolicy(0.5, {0.6, 0.6});
        RandomStream rng(99);
        std::vector<double> xs;
        for (int i = 0; i < 1000; ++i) {
            const auto r = step(p, {d.sample(rng), 1.0}, 1.0);
            xs.push_back(r.quoted.a);
            xs.push_back(r.quoted.b);
        }
        return xs;
    };
    EXPECT_EQ(run(), run());
    AnyPolicy fixed = FixedPolicy({0.6, 0.7});
    const auto r = step(fixed, {0.8, 1.0}, 1.0);
    EXPECT_EQ(r.outcome.side, Side::ForR);
    EXPECT_NEAR(r.belief_estimate, 0.8, 1e-15);
    EXPECT_EQ(policy_kind(fixed), "fixed");
    AnyPolicy lmsr = LmsrPolicy(100.0);
    EXPECT_TRUE(std::isnan(step(lmsr, {0.8, 1.0}, 1.0).belief_estimate));
}
