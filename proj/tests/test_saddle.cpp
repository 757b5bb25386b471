#include "support.hpp"

#include <doctest.h>

using namespace safepi;
using namespace safepi::testing;

namespace {

Instance binding_instance(std::uint64_t seed, double t = 0.5) {
    Instance inst = random_instance({}, seed);
    inst.m_b = interpolated_threshold(inst.sim_mdp, inst.error, t);
    return inst;
}

PolicyTable zeros_policy(std::size_t rows, std::size_t m) {
    return PolicyTable::deterministic(std::vector<std::size_t>(rows, 0), m, StateSpace::augmented);
}

}  // namespace

TEST_SUITE("saddle") {

TEST_CASE("config defaults resolve from the model") {
    const TabularMdp sim = random_mdp(3, 2, 0.9, 1);
    const SaddleConfig cfg;
    CHECK(cfg.resolved_lambda_max(sim) == doctest::Approx(40.0).epsilon(1e-14));
    CHECK(cfg.resolved_step_alpha0(sim) == doctest::Approx(0.1).epsilon(1e-14));
    SaddleConfig bad;
    bad.outer_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.lambda0 = 5.0;
    bad.lambda_max = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("inner loop stops at once from an optimal start") {
    const Instance inst = random_instance({}, 3);
    const AugmentedMdp aug = AugmentedMdp::simulated(inst.sim_mdp, inst.error, 0.5);
    const InnerResult first = inner_policy_iteration(aug, zeros_policy(8, 3), {});
    const InnerResult again = inner_policy_iteration(aug, first.policy, {});
    CHECK(again.iterations == 1);
    CHECK(again.policy == first.policy);
}

TEST_CASE("single action model needs one sweep") {
    TabularMdp mdp = random_mdp(3, 1, 0.9, 2);
    const AugmentedMdp aug = AugmentedMdp::simulated(mdp, ErrorBound::zeros(3, 1), 1.0);
    const InnerResult r = inner_policy_iteration(aug, zeros_policy(6, 1), {});
    CHECK(r.iterations == 1);
}

TEST_CASE("inner loop agrees with value iteration") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        InstanceSpec spec;
        const Instance inst = random_instance(spec, seed);
        const AugmentedMdp aug = AugmentedMdp::simulated(inst.sim_mdp, inst.error, 0.5);
        SaddleConfig cfg;
        cfg.track_coupling = TrackCoupling::independent;
        const InnerResult r = inner_policy_iteration(aug, zeros_policy(8, 3), cfg);
        BellmanConfig tight;
        tight.value_iter_tol = 1e-12;
        const ValueIterationResult vi =
            value_iteration(aug, {Eigen::VectorXd::Zero(8), StateSpace::augmented}, tight);
        CHECK((r.values.values - vi.values.values).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(r.iterations <= 10);
    }
}

TEST_CASE("shared inner loop solves the summed-reward plain problem") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Instance inst = random_instance({}, seed);
        const double lambda = 0.3 * static_cast<double>(seed);
        const AugmentedMdp aug = AugmentedMdp::simulated(inst.sim_mdp, inst.error, lambda);
        const InnerResult r = inner_policy_iteration(aug, zeros_policy(8, 3), {});
        CHECK(r.policy.track_consistent());
        const Eigen::MatrixXd summed =
            inst.sim_mdp.rewards +
            lambda * (inst.sim_mdp.rewards - 9.0 * inst.error.e);
        double best = -INFINITY;
        for (const PolicyTable& mu : enumerate_policies(4, 3, false))
            best = std::max(best, policy_return(inst.sim_mdp, mu, summed));
        CHECK(std::abs(aug.start_distribution().dot(r.values.values) - best) <= 1e-9);
    }
}

TEST_CASE("zero multiplier gives the unconstrained simulated value") {
    const Instance inst = random_instance({}, 4);
    const DualEvaluation d = dual_value_and_subgradient(inst.sim_mdp, inst.error, 0.0, inst.m_b, {});
    const PlainSolution opt = solve_optimal(inst.sim_mdp);
    CHECK(d.f == doctest::Approx(opt.values(0)).epsilon(1e-12));
}

TEST_CASE("subgradient sign follows constraint slack") {
    TabularMdp mdp = random_mdp(4, 3, 0.9, 5);
    const ErrorBound zero = ErrorBound::zeros(4, 3);
    const double top = solve_optimal(mdp).values(0);
    const DualEvaluation d = dual_value_and_subgradient(mdp, zero, 1.0, top - 1.0, {});
    CHECK(d.g > 0.0);
}

TEST_CASE("dual function is convex and g is a subgradient") {
    const Instance inst = binding_instance(1);
    std::vector<DualEvaluation> evals;
    for (int k = 0; k <= 8; ++k)
        evals.push_back(dual_value_and_subgradient(inst.sim_mdp, inst.error, 0.25 * k, inst.m_b, {}));
    for (std::size_t k = 1; k + 1 < evals.size(); ++k)
        CHECK(evals[k].f <= 0.5 * (evals[k - 1].f + evals[k + 1].f) + 1e-9);
    for (const DualEvaluation& at : evals)
        for (const DualEvaluation& other : evals)
            CHECK(other.f >= at.f + at.g * (other.lambda - at.lambda) - 1e-9);
    for (const DualEvaluation& at : evals) {
        const AugmentedMdp aug = AugmentedMdp::simulated(inst.sim_mdp, inst.error, at.lambda);
        CHECK(std::abs(augmented_return(aug, at.policy) - at.lambda * inst.m_b - at.f) <= 1e-9);
    }
}

TEST_CASE("slack threshold leaves the multiplier at zero") {
    const Instance inst = random_instance({}, 6);
    const double m_b = -inst.sim_mdp.value_bound() - 1.0;
    const SaddleSolution sol = solve_saddle(inst.sim_mdp, inst.error, m_b);
    CHECK(sol.lambda_hat == 0.0);
    CHECK(sol.feasible);
    CHECK(sol.converged);
    CHECK(policy_return(inst.sim_mdp, sol.policy_hat.restrict_track(0)) ==
          doctest::Approx(solve_optimal(inst.sim_mdp).values(0)).epsilon(1e-12));
}

TEST_CASE("exact model with the optimal baseline is tight") {
    TabularMdp mdp = random_mdp(4, 3, 0.9, 7);
    const PlainSolution opt = solve_optimal(mdp);
    const double m_b = baseline_threshold(mdp, opt.policy);
    const SaddleSolution sol = solve_saddle(mdp, ErrorBound::zeros(4, 3), m_b);
    CHECK(sol.feasible);
    CHECK(std::abs(policy_return(mdp, sol.policy_hat.restrict_track(1)) - m_b) <= 1e-6);
}

TEST_CASE("unreachable threshold is reported infeasible") {
    const Instance inst = random_instance({}, 8);
    const SaddleSolution sol =
        solve_saddle(inst.sim_mdp, inst.error, inst.sim_mdp.value_bound() + 1.0);
    CHECK_FALSE(sol.feasible);
    CHECK(sol.lambda_hat == doctest::Approx(sol.lambda_max));
}

TEST_CASE("solver dual matches the exact dual on binding instances") {
    int binding = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance inst = binding_instance(1000 + seed, 0.5);
        const SaddleSolution sol = solve_saddle(inst.sim_mdp, inst.error, inst.m_b);
        const auto [lambda_star, f_star] =
            exact_surrogate_dual(inst.sim_mdp, inst.error, inst.m_b, sol.lambda_max);
        binding += lambda_star > 0.0;
        CHECK(std::abs(sol.dual_value - f_star) <= 1e-6);
        CHECK(sol.feasible);
        CHECK(feasibility_certificate(inst.sim_mdp, inst.error, sol.policy_hat, inst.m_b));
        for (std::size_t k = 1; k < sol.f_min_trace.size(); ++k)
            CHECK(sol.f_min_trace[k] <= sol.f_min_trace[k - 1]);
        for (double l : sol.lambda_trace) CHECK((l >= 0.0 && l <= sol.lambda_max));
    }
    CHECK(binding >= 5);
}

TEST_CASE("re-solving at the returned multiplier reproduces the values") {
    for (std::uint64_t seed = 1000; seed < 1010; ++seed) {
        const Instance inst = binding_instance(seed);
        const SaddleSolution sol = solve_saddle(inst.sim_mdp, inst.error, inst.m_b);
        const AugmentedMdp aug = AugmentedMdp::simulated(inst.sim_mdp, inst.error, sol.lambda_hat);
        const InnerResult again = inner_policy_iteration(aug, zeros_policy(8, 3), {});
        const Eigen::VectorXd v = evaluate_policy_aug(aug, sol.policy_hat).values;
        // At a kink several policies attain the track sum; the sum itself is unique.
        const Eigen::VectorXd sum_again = again.values.values.head(4) + again.values.values.tail(4);
        CHECK((sum_again - v.head(4) - v.tail(4)).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(std::abs(aug.start_distribution().dot(again.values.values - v)) <= 1e-9);
    }
}

TEST_CASE("dual optimality gap respects the step-size bound") {
    const Instance inst = binding_instance(1007);
    SaddleConfig cfg;
    cfg.feasible_side_extraction = false;
    const SaddleSolution sol = solve_saddle(inst.sim_mdp, inst.error, inst.m_b, cfg);
    const auto [lambda_star, f_star] =
        exact_surrogate_dual(inst.sim_mdp, inst.error, inst.m_b, sol.lambda_max);
    const double alpha0 = cfg.resolved_step_alpha0(inst.sim_mdp);
    double num = (sol.lambda_trace[0] - lambda_star) * (sol.lambda_trace[0] - lambda_star);
    double den = 0.0;
    for (std::size_t q = 0; q < sol.outer_iterations; ++q) {
        const double alpha = alpha0 / static_cast<double>(q + 1);
        num += alpha * alpha * sol.subgradient_trace[q] * sol.subgradient_trace[q];
        den += 2.0 * alpha;
        CHECK(sol.f_min_trace[q] - f_star <= num / den + 1e-9);
    }
}

TEST_CASE("non-literal bookkeeping still tracks the best value") {
    const Instance inst = binding_instance(1002);
    SaddleConfig cfg;
    cfg.literal_best_lambda = false;
    const SaddleSolution sol = solve_saddle(inst.sim_mdp, inst.error, inst.m_b, cfg);
    const auto [lambda_star, f_star] =
        exact_surrogate_dual(inst.sim_mdp, inst.error, inst.m_b, sol.lambda_max);
    CHECK(std::abs(sol.dual_value - f_star) <= 1e-6);
    for (std::size_t k = 1; k < sol.f_min_trace.size(); ++k)
        CHECK(sol.f_min_trace[k] <= sol.f_min_trace[k - 1]);
}

TEST_CASE("repeated solves are identical") {
    const Instance inst = binding_instance(1009);
    const SaddleSolution a = solve_saddle(inst.sim_mdp, inst.error, inst.m_b);
    const SaddleSolution b = solve_saddle(inst.sim_mdp, inst.error, inst.m_b);
    CHECK(a.lambda_trace == b.lambda_trace);
    CHECK(a.dual_value == b.dual_value);
    CHECK(a.policy_hat == b.policy_hat);
}

}
