#include <gtest/gtest.h>

#include <vector>

#include "avgrew/environments.hpp"
#include "avgrew/planning.hpp"

using namespace avgrew;

namespace {

Policy two_loop_policy(const TabularMdp& mdp, double left) {
    RaggedTable<double> probs(mdp.shape(), 1.0);
    probs(0, kLeft) = left;
    probs(0, kRight) = 1.0 - left;
    return Policy(probs);
}

}  // namespace

TEST(Selector, SweepIsRoundRobin) {
    PlanningSelector sel(PlanningSelector::Kind::sweep);
    Rng rng(1);
    const auto mdp = build_two_loop();
    for (int round = 0; round < 3; ++round) {
        for (std::size_t i = 0; i < mdp.num_pairs(); ++i) {
            const auto [s, a] = sel.next_pair(mdp, rng);
            EXPECT_EQ(mdp.shape().index(s, a), i);
        }
    }
}

TEST(Selector, UniformCoversAllPairs) {
    PlanningSelector sel;
    Rng rng(2);
    const auto mdp = build_access_control();
    std::vector<int> hits(mdp.num_pairs(), 0);
    for (int i = 0; i < 20000; ++i) {
        const auto [s, a] = sel.next_pair(mdp, rng);
        ++hits[mdp.shape().index(s, a)];
    }
    for (int h : hits) EXPECT_GT(h, 0);
}

TEST(DiffQPlanning, SweepConvergesToOptimalRate) {
    const auto mdp = build_two_loop();
    DifferentialQLearning learner(mdp.shape(), 1.0, StepSizeSchedule::per_pair_count(0.1, 0.5001));
    PlanningSelector sel(PlanningSelector::Kind::sweep);
    Rng rng(3);
    for (int t = 0; t < 200000; ++t) {
        diffq_planning_step(learner, mdp, sel, rng);
        ASSERT_NEAR(learner.offset_residual(), 0.0, 1e-9);
    }
    EXPECT_NEAR(learner.reward_rate(), 0.4, 0.02);
}

TEST(DiffQPlanning, SelfLoop) {
    const TabularMdp mdp({{{{1.0, 0, 3.0}}}});
    DifferentialQLearning learner(mdp.shape(), 1.0, StepSizeSchedule::constant(0.1));
    PlanningSelector sel;
    Rng rng(4);
    for (int t = 0; t < 2000; ++t) diffq_planning_step(learner, mdp, sel, rng);
    EXPECT_NEAR(learner.reward_rate(), 3.0, 1e-6);
}

// A planning step is a learning step on the simulated transition.
TEST(DiffQPlanning, ReplayIsBitwiseEqual) {
    const auto mdp = build_access_control();
    DifferentialQLearning planner(mdp.shape(), 0.5, StepSizeSchedule::constant(0.05));
    DifferentialQLearning replay(mdp.shape(), 0.5, StepSizeSchedule::constant(0.05));
    PlanningSelector sel;
    Rng rng(5);
    for (int t = 0; t < 5000; ++t) {
        const auto tr = diffq_planning_step(planner, mdp, sel, rng);
        replay.step(tr);
    }
    EXPECT_TRUE(planner.q() == replay.q());
    EXPECT_EQ(planner.reward_rate(), replay.reward_rate());
}

TEST(DiffTDPlanning, OnPolicyConverges) {
    const auto mdp = build_two_loop();
    const auto pi = Policy::uniform(mdp);
    DifferentialTD learner(mdp.num_states(), 1.0, StepSizeSchedule::constant(0.01));
    PlanningSelector sel;
    Rng rng(6);
    for (int t = 0; t < 100000; ++t) {
        const auto tr = difftd_planning_step(learner, mdp, pi, pi, sel, rng);
        ASSERT_TRUE(tr.state < mdp.num_states());
    }
    EXPECT_NEAR(learner.reward_rate(), 0.3, 0.02);
}

TEST(DiffTDPlanning, OffPolicyConverges) {
    const auto mdp = build_two_loop();
    const auto pi = two_loop_policy(mdp, 0.5);
    const auto b = two_loop_policy(mdp, 0.9);
    DifferentialTD learner(mdp.num_states(), 1.0, StepSizeSchedule::constant(0.005));
    PlanningSelector sel;
    Rng rng(7);
    for (int t = 0; t < 200000; ++t) difftd_planning_step(learner, mdp, b, pi, sel, rng);
    EXPECT_NEAR(learner.reward_rate(), 0.3, 0.05);
}

TEST(DiffTDPlanning, ReplayIsBitwiseEqual) {
    const auto mdp = build_two_loop();
    const auto pi = two_loop_policy(mdp, 0.5);
    const auto b = two_loop_policy(mdp, 0.9);
    DifferentialTD planner(mdp.num_states(), 0.5, StepSizeSchedule::constant(0.1));
    DifferentialTD replay(mdp.num_states(), 0.5, StepSizeSchedule::constant(0.1));
    PlanningSelector sel(PlanningSelector::Kind::sweep);
    Rng rng(8);
    for (int t = 0; t < 5000; ++t) {
        const auto tr = difftd_planning_step(planner, mdp, b, pi, sel, rng);
        replay.step(tr, importance_ratio(pi, b, tr.state, tr.action));
    }
    EXPECT_EQ(planner.v(), replay.v());
}

TEST(DiffTDPlanning, CoverageViolation) {
    const auto mdp = build_two_loop();
    const auto pi = two_loop_policy(mdp, 0.5);
    const auto b = two_loop_policy(mdp, 1.0);
    DifferentialTD learner(mdp.num_states(), 1.0, StepSizeSchedule::constant(0.1));
    PlanningSelector sel(PlanningSelector::Kind::sweep);
    Rng rng(9);
    EXPECT_THROW(difftd_planning_step(learner, mdp, b, pi, sel, rng), CoverageError);
}
