#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "avgrew/environments.hpp"
#include "avgrew/mdp.hpp"

using namespace avgrew;

namespace {

TabularMdp self_loop(double reward) { return TabularMdp({{{{1.0, 0, reward}}}}); }

// Upper 0.001 quantiles of the chi-squared distribution by degrees of freedom.
double chi2_critical(std::size_t dof) {
    static const double table[] = {0.0, 10.828, 13.816, 16.266, 18.467, 20.515, 22.458, 24.322, 26.124};
    return table[dof];
}

}  // namespace

TEST(RaggedShape, IndexAndLocateRoundTrip) {
    RaggedShape shape({2, 1, 3});
    EXPECT_EQ(shape.size(), 6u);
    EXPECT_EQ(shape.index(2, 1), 4u);
    for (std::size_t i = 0; i < shape.size(); ++i) {
        const auto [s, a] = shape.locate(i);
        EXPECT_EQ(shape.index(s, a), i);
    }
    EXPECT_FALSE(shape.contains(1, 1));
    EXPECT_FALSE(shape.contains(3, 0));
}

TEST(Validate, TwoLoopIsValid) {
    EXPECT_TRUE(validate_mdp(build_two_loop()).empty());
}

TEST(Validate, ProbabilitySumViolation) {
    TabularMdp mdp({{{{0.9, 0, 0.0}}}});
    const auto report = validate_mdp(mdp);
    ASSERT_EQ(report.size(), 1u);
    EXPECT_EQ(report[0].kind, Violation::Kind::probability_sum);
    EXPECT_EQ(report[0].state, 0u);
    EXPECT_EQ(report[0].action, 0u);
}

TEST(Validate, IndexOutOfRange) {
    TabularMdp mdp({{{{1.0, 1, 0.0}}}});
    const auto report = validate_mdp(mdp);
    ASSERT_EQ(report.size(), 1u);
    EXPECT_EQ(report[0].kind, Violation::Kind::index_out_of_range);
}

TEST(Validate, OtherViolations) {
    TabularMdp negative({{{{1.5, 0, 0.0}, {-0.5, 0, 0.0}}}});
    bool has_negative = false;
    for (const auto& v : validate_mdp(negative)) has_negative |= v.kind == Violation::Kind::negative_probability;
    EXPECT_TRUE(has_negative);

    TabularMdp nan_reward({{{{1.0, 0, std::nan("")}}}});
    ASSERT_EQ(validate_mdp(nan_reward).size(), 1u);
    EXPECT_EQ(validate_mdp(nan_reward)[0].kind, Violation::Kind::non_finite_reward);

    TabularMdp no_actions(std::vector<std::vector<TabularMdp::OutcomeList>>(1));
    ASSERT_EQ(validate_mdp(no_actions).size(), 1u);
    EXPECT_EQ(validate_mdp(no_actions)[0].kind, Violation::Kind::no_actions);

    TabularMdp empty_outcomes(std::vector<std::vector<TabularMdp::OutcomeList>>(1, std::vector<TabularMdp::OutcomeList>(1)));
    ASSERT_EQ(validate_mdp(empty_outcomes).size(), 1u);
    EXPECT_EQ(validate_mdp(empty_outcomes)[0].kind, Violation::Kind::empty_outcomes);
}

TEST(Validate, PolicyShapeAndSums) {
    const auto mdp = build_two_loop();
    EXPECT_TRUE(validate_policy(mdp, Policy::uniform(mdp)).empty());
    RaggedTable<double> bad(mdp.shape(), 0.5);
    EXPECT_FALSE(validate_policy(mdp, Policy(bad)).empty());
    const auto other = build_two_state_transient();
    EXPECT_FALSE(validate_policy(mdp, Policy::uniform(other)).empty());
}

TEST(Sample, TwoLoopStateEightAlwaysPaysTwo) {
    const auto mdp = build_two_loop();
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const auto [next, reward] = sample_transition(mdp, 8, 0, rng);
        ASSERT_EQ(next, 0u);
        ASSERT_EQ(reward, 2.0);
    }
}

TEST(Sample, TransientSelfLoop) {
    const auto mdp = build_two_state_transient();
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const auto [next, reward] = sample_transition(mdp, 1, 0, rng);
        ASSERT_EQ(next, 1u);
        ASSERT_EQ(reward, 2.0);
    }
}

TEST(Sample, TransientBranchFrequency) {
    const auto mdp = build_two_state_transient();
    Rng rng(3);
    const int n = 1000000;
    int to_one = 0;
    for (int i = 0; i < n; ++i) to_one += sample_transition(mdp, 0, 0, rng).first == 1;
    EXPECT_NEAR(static_cast<double>(to_one) / n, 0.1, 0.003);
}

TEST(Sample, InvalidPairThrows) {
    const auto mdp = build_two_loop();
    Rng rng(4);
    EXPECT_THROW(sample_transition(mdp, 1, 1, rng), std::out_of_range);
    EXPECT_THROW(sample_transition(mdp, 9, 0, rng), std::out_of_range);
}

TEST(Sample, DeterministicGivenRngState) {
    const auto mdp = build_access_control();
    Rng a(99), b(99);
    for (int i = 0; i < 1000; ++i) {
        ASSERT_EQ(sample_transition(mdp, 20, 1, a), sample_transition(mdp, 20, 1, b));
    }
}

// Chi-squared goodness of fit of the next-state histogram against the
// transition list, over every Access-Control pair with a few outcomes.
TEST(Sample, ChiSquaredAgainstTransitionList) {
    const auto mdp = build_access_control();
    Rng rng(5);
    const int n = 1000000;
    int tested = 0;
    for (std::size_t s = 0; s < mdp.num_states() && tested < 3; ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
            const auto& outs = mdp.outcomes(s, a);
            if (outs.size() < 3 || outs.size() > 8) continue;
            std::vector<double> expected(mdp.num_states(), 0.0);
            for (const auto& o : outs) expected[o.next_state] += o.probability;
            std::vector<int> counts(mdp.num_states(), 0);
            for (int i = 0; i < n; ++i) ++counts[sample_transition(mdp, s, a, rng).first];
            double chi2 = 0.0;
            std::size_t cells = 0;
            for (std::size_t k = 0; k < expected.size(); ++k) {
                if (expected[k] <= 0.0) {
                    ASSERT_EQ(counts[k], 0);
                    continue;
                }
                const double e = expected[k] * n;
                chi2 += (counts[k] - e) * (counts[k] - e) / e;
                ++cells;
            }
            EXPECT_LT(chi2, chi2_critical(cells - 1)) << "pair (" << s << ", " << a << ")";
            ++tested;
            break;
        }
    }
    EXPECT_EQ(tested, 3);
}

TEST(InducedChain, TwoLoopUniformRewards) {
    const auto mdp = build_two_loop();
    const auto chain = induced_chain(mdp, Policy::uniform(mdp));
    EXPECT_DOUBLE_EQ(chain.reward(0), 0.5);
    EXPECT_DOUBLE_EQ(chain.reward(8), 2.0);
    for (int s = 1; s <= 7; ++s) EXPECT_EQ(chain.reward(s), 0.0);
    EXPECT_DOUBLE_EQ(chain.transition(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(chain.transition(0, 5), 0.5);
}

TEST(InducedChain, SelfLoop) {
    const auto mdp = self_loop(3.0);
    const auto chain = induced_chain(mdp, Policy::uniform(mdp));
    EXPECT_EQ(chain.transition.rows(), 1);
    EXPECT_EQ(chain.transition(0, 0), 1.0);
    EXPECT_EQ(chain.reward(0), 3.0);
}

TEST(InducedChain, RowsSumToOneOnAllBenchmarks) {
    Rng rng(6);
    for (const auto& name : tabular_environment_names()) {
        const auto env = make_environment(name);
        for (int trial = 0; trial < 20; ++trial) {
            RaggedTable<double> probs(env.mdp.shape());
            for (std::size_t s = 0; s < env.mdp.num_states(); ++s) {
                double total = 0.0;
                for (auto& p : probs.row(s)) total += (p = uniform01(rng) + 1e-3);
                for (auto& p : probs.row(s)) p /= total;
            }
            const auto chain = induced_chain(env.mdp, Policy(probs));
            for (Eigen::Index s = 0; s < chain.transition.rows(); ++s) {
                ASSERT_NEAR(chain.transition.row(s).sum(), 1.0, 1e-12) << name;
            }
        }
    }
}

TEST(InducedChain, ShapeMismatchThrows) {
    const auto mdp = build_two_loop();
    const auto other = build_two_state_transient();
    EXPECT_THROW(induced_chain(mdp, Policy::uniform(other)), std::invalid_argument);
}

TEST(Communicating, Examples) {
    EXPECT_TRUE(is_communicating(build_two_loop()));
    EXPECT_FALSE(is_communicating(build_two_state_transient()));
    EXPECT_TRUE(is_communicating(self_loop(1.0)));
    EXPECT_TRUE(is_communicating(build_access_control()));
}

TEST(PolicyTest, SampleFollowsProbabilities) {
    const auto mdp = build_two_loop();
    RaggedTable<double> probs(mdp.shape(), 1.0);
    probs(0, 0) = 0.9;
    probs(0, 1) = 0.1;
    const Policy b(probs);
    Rng rng(8);
    const int n = 100000;
    int left = 0;
    for (int i = 0; i < n; ++i) left += b.sample(0, rng) == 0;
    EXPECT_NEAR(left / static_cast<double>(n), 0.9, 4 * std::sqrt(0.09 / n));
}

TEST(PolicyTest, DeterministicRejectsBadAction) {
    const auto mdp = build_two_loop();
    std::vector<std::size_t> actions(9, 0);
    actions[1] = 1;
    EXPECT_THROW(Policy::deterministic(mdp, actions), std::out_of_range);
    EXPECT_THROW(Policy::deterministic(mdp, std::vector<std::size_t>(3, 0)), std::invalid_argument);
}
