#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "avgrew/environments.hpp"
#include "avgrew/exact_solvers.hpp"
#include "avgrew/prediction.hpp"

using namespace avgrew;

namespace {

Policy two_loop_policy(const TabularMdp& mdp, double left) {
    RaggedTable<double> probs(mdp.shape(), 1.0);
    probs(0, kLeft) = left;
    probs(0, kRight) = 1.0 - left;
    return Policy(probs);
}

const std::vector<double> kReferenceV{-0.2, -1.4, -1.1, -0.8, -0.5, 0.6, 0.9, 1.2, 1.5};

}  // namespace

TEST(ImportanceRatio, Examples) {
    const auto mdp = build_two_loop();
    const auto pi = two_loop_policy(mdp, 0.5);
    const auto b = two_loop_policy(mdp, 0.9);
    EXPECT_NEAR(importance_ratio(pi, b, 0, kLeft), 0.5 / 0.9, 1e-12);
    EXPECT_NEAR(importance_ratio(pi, b, 0, kRight), 5.0, 1e-12);
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(s); ++a) EXPECT_EQ(importance_ratio(pi, pi, s, a), 1.0);
    }
}

TEST(ImportanceRatio, CoverageViolation) {
    const auto mdp = build_two_loop();
    const auto pi = two_loop_policy(mdp, 0.2);
    const auto b = two_loop_policy(mdp, 1.0);
    EXPECT_THROW(importance_ratio(pi, b, 0, kRight), CoverageError);
    EXPECT_THROW(check_coverage(pi, b), CoverageError);
    EXPECT_NO_THROW(check_coverage(b, pi));
}

TEST(DiffTD, ZeroInitStep) {
    DifferentialTD learner(3, 1.0, StepSizeSchedule::constant(0.1));
    learner.step({0, 0, 1.0, 1}, 1.0);
    EXPECT_DOUBLE_EQ(learner.v()[0], 0.1);
    EXPECT_DOUBLE_EQ(learner.reward_rate(), 0.1);
}

TEST(DiffTD, ReferenceValuesAreFixedPoint) {
    DifferentialTD learner(kReferenceV, 1.0, StepSizeSchedule::constant(0.1), 0.3);
    EXPECT_NEAR(learner.step({8, 0, 2.0, 0}), 0.0, 1e-12);
    EXPECT_NEAR(learner.v()[8], 1.5, 1e-12);
    EXPECT_NEAR(learner.reward_rate(), 0.3, 1e-12);
}

TEST(DiffTD, ZeroRatioNoChange) {
    DifferentialTD learner(kReferenceV, 1.0, StepSizeSchedule::constant(0.1), 0.0);
    learner.step({3, 0, 100.0, 2}, 0.0);
    EXPECT_EQ(learner.v(), kReferenceV);
    EXPECT_EQ(learner.reward_rate(), 0.0);
}

TEST(DiffTD, NegativeRatioRejected) {
    DifferentialTD learner(2, 1.0, StepSizeSchedule::constant(0.1));
    EXPECT_THROW(learner.step({0, 0, 1.0, 1}, -0.5), std::invalid_argument);
}

TEST(DiffTD, OnPolicyRatioIsBitwiseNeutral) {
    const auto mdp = build_two_loop();
    const auto pi = Policy::uniform(mdp);
    DifferentialTD a(mdp.num_states(), 0.25, StepSizeSchedule::exp_decay(0.2, 0.9995));
    DifferentialTD b(mdp.num_states(), 0.25, StepSizeSchedule::exp_decay(0.2, 0.9995));
    Rng rng(31);
    std::size_t s = 0;
    for (int t = 0; t < 5000; ++t) {
        const auto tr = sample_step(mdp, pi, s, rng);
        a.step(tr, importance_ratio(pi, pi, tr.state, tr.action));
        b.step(tr);
        s = tr.next_state;
    }
    EXPECT_EQ(a.v(), b.v());
    EXPECT_EQ(a.reward_rate(), b.reward_rate());
}

TEST(DiffTD, OffsetIdentityWithRatios) {
    Rng rng(32);
    const auto mdp = build_two_loop();
    const auto pi = two_loop_policy(mdp, 0.5);
    const auto b = two_loop_policy(mdp, 0.9);
    std::vector<double> v0(mdp.num_states());
    for (auto& x : v0) x = uniform01(rng);
    DifferentialTD learner(v0, 0.7, StepSizeSchedule::per_pair_count(0.5, 0.8), 0.25);
    std::size_t s = 0;
    for (int t = 0; t < 10000; ++t) {
        const auto tr = sample_step(mdp, b, s, rng);
        learner.step(tr, importance_ratio(pi, b, tr.state, tr.action));
        s = tr.next_state;
        ASSERT_NEAR(learner.reward_rate() - 0.25, 0.7 * (vector_sum(learner.v()) - vector_sum(v0)), 1e-9);
    }
}

TEST(AvgCostTD, RewardRateIsExponentialAverage) {
    AverageCostTD learner(2, 1.0, StepSizeSchedule::constant(0.1));
    learner.step({0, 0, 1.0, 1});
    EXPECT_DOUBLE_EQ(learner.reward_rate(), 0.1);

    // Same reward stream, wildly different values: identical rbar.
    AverageCostTD a(std::vector<double>{0.0, 0.0}, 0.5, StepSizeSchedule::constant(0.2));
    AverageCostTD b(std::vector<double>{50.0, -30.0}, 0.5, StepSizeSchedule::constant(0.2));
    for (int t = 0; t < 200; ++t) {
        const Transition tr{static_cast<std::size_t>(t % 2), 0, 3.0, static_cast<std::size_t>((t + 1) % 2)};
        a.step(tr);
        b.step(tr);
        ASSERT_EQ(a.reward_rate(), b.reward_rate());
    }
    EXPECT_NEAR(a.reward_rate(), 3.0, 1e-6);
}

// At the reference values with rbar = r(pi), every deterministic transition has
// zero TD error and state 0 errs by +-0.5 with mean zero. Started there,
// Average Cost TD keeps V near v_pi while rbar fluctuates around 0.3.
TEST(AvgCostTD, ReferenceValuesStayFixed) {
    const auto mdp = build_two_loop();
    const auto pi = Policy::uniform(mdp);
    AverageCostTD learner(kReferenceV, 1.0, StepSizeSchedule::constant(0.01), 0.3);
    Rng rng(33);
    std::size_t s = 0;
    double rbar_sum = 0.0;
    const int n = 20000;
    for (int t = 0; t < n; ++t) {
        const auto tr = sample_step(mdp, pi, s, rng);
        const double delta = tr.reward - 0.3 + kReferenceV[tr.next_state] - kReferenceV[tr.state];
        ASSERT_NEAR(std::abs(delta), tr.state == 0 ? 0.5 : 0.0, 1e-12);
        learner.step(tr);
        rbar_sum += learner.reward_rate();
        s = tr.next_state;
    }
    EXPECT_NEAR(rbar_sum / n, 0.3, 0.05);
    for (std::size_t i = 0; i < kReferenceV.size(); ++i) EXPECT_NEAR(learner.v()[i], kReferenceV[i], 0.15) << i;
}

TEST(CenteredTD, ZeroInitStep) {
    CenteredDifferentialTD learner(DifferentialTD(3, 1.0, StepSizeSchedule::constant(0.1)), 1.0,
                                   StepSizeSchedule::constant(0.1));
    const double big_delta = learner.step({0, 0, 1.0, 1}, 1.0);
    EXPECT_DOUBLE_EQ(learner.v()[0], 0.1);
    EXPECT_DOUBLE_EQ(learner.reward_rate(), 0.1);
    EXPECT_DOUBLE_EQ(big_delta, 0.1);
    EXPECT_DOUBLE_EQ(learner.auxiliary()[0], 0.01);
    EXPECT_DOUBLE_EQ(learner.offset(), 0.01);
}

TEST(CenteredTD, ZeroRatioNoChange) {
    CenteredDifferentialTD learner(DifferentialTD(3, 1.0, StepSizeSchedule::constant(0.1)), 1.0,
                                   StepSizeSchedule::constant(0.1));
    learner.step({0, 0, 1.0, 1}, 0.0);
    EXPECT_EQ(learner.v(), std::vector<double>(3, 0.0));
    EXPECT_EQ(learner.auxiliary(), std::vector<double>(3, 0.0));
    EXPECT_EQ(learner.offset(), 0.0);
}

TEST(CenteredTD, OffsetIdentitiesAndConvergence) {
    const auto mdp = build_two_loop();
    const auto pi = Policy::uniform(mdp);
    const auto sol = differential_values(mdp, pi);
    CenteredDifferentialTD learner(DifferentialTD(mdp.num_states(), 0.25, StepSizeSchedule::exp_decay(0.2, 0.9999)),
                                   0.25, StepSizeSchedule::exp_decay(0.2, 0.9999));
    Rng rng(34);
    std::size_t s = 0;
    for (int t = 0; t < 40000; ++t) {
        const auto tr = sample_step(mdp, pi, s, rng);
        learner.step(tr);
        s = tr.next_state;
        ASSERT_NEAR(learner.inner().offset_residual(), 0.0, 1e-9);
        ASSERT_NEAR(learner.offset_residual(), 0.0, 1e-9);
    }
    const auto centered = learner.centered_v();
    for (std::size_t i = 0; i < centered.size(); ++i) {
        EXPECT_NEAR(centered[i], sol.v(static_cast<Eigen::Index>(i)), 0.1) << "state " << i;
    }
}

// Holding V = v_pi and rbar = r(pi) fixed, the importance-weighted TD error
// has mean zero under b, while rho (r - rbar) does not.
TEST(OffPolicy, DifferentialVersusAverageCostDrift) {
    const auto mdp = build_two_loop();
    const auto pi = two_loop_policy(mdp, 0.5);
    const auto b = two_loop_policy(mdp, 0.9);
    Rng rng(35);
    std::size_t s = 0;
    const int n = 200000;
    double sum_td = 0, sq_td = 0, sum_ac = 0, sq_ac = 0;
    for (int t = 0; t < n; ++t) {
        const auto tr = sample_step(mdp, b, s, rng);
        const double rho = importance_ratio(pi, b, tr.state, tr.action);
        const double td = rho * (tr.reward - 0.3 + kReferenceV[tr.next_state] - kReferenceV[tr.state]);
        const double ac = rho * (tr.reward - 0.3);
        sum_td += td;
        sq_td += td * td;
        sum_ac += ac;
        sq_ac += ac * ac;
        s = tr.next_state;
    }
    // Per-step terms are correlated along the chain, so the i.i.d. sigma is
    // only a guide; the drift gap is large either way.
    const double mean_td = sum_td / n, mean_ac = sum_ac / n;
    const double se_td = std::sqrt((sq_td / n - mean_td * mean_td) / n);
    const double se_ac = std::sqrt((sq_ac / n - mean_ac * mean_ac) / n);
    EXPECT_LT(std::abs(mean_td), 3 * se_td);
    EXPECT_GT(std::abs(mean_ac), 5 * se_ac);
}
