#include "support.hpp"

#include <doctest.h>

using namespace safepi;
using namespace safepi::testing;

namespace {

Instance small_instance(std::uint64_t seed) {
    InstanceSpec spec;
    spec.n_states = 3;
    spec.n_actions = 2;
    return random_instance(spec, seed);
}

}  // namespace

TEST_SUITE("augmentation") {

TEST_CASE("track rewards") {
    const Instance inst = small_instance(1);
    const AugmentedMdp plain = AugmentedMdp::simulated(inst.sim_mdp, inst.error, 0.7, RewardMode::plain);
    const AugmentedMdp pen = AugmentedMdp::simulated(inst.sim_mdp, inst.error, 0.7, RewardMode::penalized);
    const double c = 0.9 / 0.1;
    for (std::size_t x = 0; x < 3; ++x)
        for (std::size_t a = 0; a < 2; ++a) {
            const double r = inst.sim_mdp.reward(x, a);
            CHECK(reward_lambda(plain, x, 0, a) == 2.0 * r);
            CHECK(reward_lambda(plain, x, 1, a) == doctest::Approx(1.4 * r).epsilon(1e-15));
            CHECK(reward_hat_lambda(pen, x, 0, a) == 2.0 * r);
            CHECK(reward_hat_lambda(pen, x, 1, a) ==
                  doctest::Approx(1.4 * r - 1.4 * c * inst.error.e(x, a)).epsilon(1e-14));
            CHECK(pen.reward(pen.index(x, 1), a) == reward_hat_lambda(pen, x, 1, a));
            CHECK(plain.reward(plain.index(x, 1), a) == reward_lambda(plain, x, 1, a));
        }
}

TEST_CASE("zero multiplier silences track one") {
    const Instance inst = small_instance(2);
    const AugmentedMdp aug = AugmentedMdp::simulated(inst.sim_mdp, inst.error, 0.0);
    CHECK(aug.rewards().bottomRows(3).isZero(0.0));
}

TEST_CASE("tracks never mix") {
    const Instance inst = small_instance(3);
    const AugmentedMdp mixed = AugmentedMdp::mixed(inst.sim_mdp, inst.true_mdp, inst.error, 1.0);
    for (std::size_t a = 0; a < 2; ++a) {
        const Eigen::MatrixXd& p = mixed.transitions(a);
        CHECK(p.topRightCorner(3, 3).isZero(0.0));
        CHECK(p.bottomLeftCorner(3, 3).isZero(0.0));
        CHECK(p.topLeftCorner(3, 3) == inst.sim_mdp.transitions[a]);
        CHECK(p.bottomRightCorner(3, 3) == inst.true_mdp.transitions[a]);
        for (std::size_t x = 0; x < 3; ++x)
            for (int i = 0; i < 2; ++i) {
                const Eigen::VectorXd row = transition_aug(mixed, x, i, a);
                CHECK(row.sum() == doctest::Approx(1.0).epsilon(1e-14));
                CHECK(row == p.row(static_cast<Eigen::Index>(mixed.index(x, i))).transpose());
            }
    }
}

TEST_CASE("simulated dynamics use the estimate on both tracks") {
    const Instance inst = small_instance(4);
    const AugmentedMdp mixed = AugmentedMdp::mixed(inst.sim_mdp, inst.true_mdp, inst.error, 1.0);
    const Eigen::VectorXd row = transition_aug(mixed, 1, 1, 0, TrackDynamics::simulated);
    CHECK(row.tail(3) == inst.sim_mdp.transitions[0].row(1).transpose());
    const AugmentedMdp sim = AugmentedMdp::simulated(inst.sim_mdp, inst.error, 1.0);
    CHECK_THROWS_AS(transition_aug(sim, 0, 1, 0, TrackDynamics::mixed), std::invalid_argument);
}

TEST_CASE("start distribution splits evenly") {
    const Instance inst = small_instance(5);
    const AugmentedMdp aug = AugmentedMdp::simulated(inst.sim_mdp, inst.error, 1.0);
    const Eigen::VectorXd p0 = aug.start_distribution();
    CHECK(p0.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p0(0) == 0.5);
    CHECK(p0(3) == 0.5);
}

TEST_CASE("augmented return is the Lagrangian") {
    std::mt19937_64 rng(17);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance inst = small_instance(seed);
        const double lambda = 0.25 * static_cast<double>(seed % 5);
        const AugmentedMdp aug = AugmentedMdp::mixed(inst.sim_mdp, inst.true_mdp, inst.error, lambda);
        const PolicyTable mu = random_stochastic_policy(6, 2, StateSpace::augmented, rng);
        const auto [lhs, rhs] = lagrangian_identity_check(aug, mu);
        const double track0 = policy_return(inst.sim_mdp, mu.restrict_track(0));
        const double track1 = policy_return(inst.true_mdp, mu.restrict_track(1));
        CHECK(std::abs(lhs - rhs) <= kValueTol);
        CHECK(std::abs(lhs - (track0 + lambda * track1)) <= kValueTol);

        const LoopAugmented loop = loop_augmented(inst.sim_mdp, inst.true_mdp, inst.error, lambda, false);
        CHECK(std::abs(loop.start_value(loop.iterate_policy(mu.probabilities())) - lhs) <= 1e-9);
    }
}

TEST_CASE("lagrangian identity on the seed 42 instance") {
    InstanceSpec spec;
    spec.n_states = 5;
    const Instance inst = random_instance(spec, 42);
    const AugmentedMdp aug = AugmentedMdp::mixed(inst.sim_mdp, inst.true_mdp, inst.error, 0.7);
    const PolicyTable mu = PolicyTable::lift(solve_optimal(inst.sim_mdp).policy);
    const auto [lhs, rhs] = lagrangian_identity_check(aug, mu);
    CHECK(std::abs(lhs - rhs) <= 1e-9);
}

TEST_CASE("penalized surrogate return") {
    const Instance inst = small_instance(6);
    const double lambda = 1.3;
    const AugmentedMdp pen = AugmentedMdp::simulated(inst.sim_mdp, inst.error, lambda);
    const PolicyTable plain = PolicyTable::uniform(3, 2);
    const double c = pen.penalty_coefficient();
    const Eigen::MatrixXd r_hat = inst.sim_mdp.rewards - c * inst.error.e;
    const double expected =
        policy_return(inst.sim_mdp, plain) + lambda * policy_return(inst.sim_mdp, plain, r_hat);
    CHECK(augmented_return(pen, PolicyTable::lift(plain)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("changing the multiplier rebuilds rewards only") {
    const Instance inst = small_instance(7);
    const AugmentedMdp a = AugmentedMdp::simulated(inst.sim_mdp, inst.error, 0.5);
    const AugmentedMdp b = a.with_lambda(2.0);
    CHECK(b.lambda() == 2.0);
    CHECK(b.rewards().topRows(3) == a.rewards().topRows(3));
    CHECK(b.transitions(1) == a.transitions(1));
    CHECK(b.reward(b.index(2, 1), 1) == doctest::Approx(4.0 * a.reward(a.index(2, 1), 1)).epsilon(1e-14));
}

TEST_CASE("bad construction is rejected") {
    const Instance inst = small_instance(8);
    CHECK_THROWS(AugmentedMdp::simulated(inst.sim_mdp, inst.error, -1.0));
    CHECK_THROWS(AugmentedMdp::simulated(inst.sim_mdp, ErrorBound::zeros(2, 2), 1.0));
    CHECK_THROWS(AugmentedMdp(inst.sim_mdp, inst.error, 1.0, RewardMode::plain, TrackDynamics::mixed));
}

}
