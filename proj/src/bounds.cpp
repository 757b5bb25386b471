#include "safepi/bounds.hpp"

#include <algorithm>
#include <stdexcept>

namespace safepi {

namespace {

constexpr double kFeasibleSlack = 1e-9;
constexpr double kValidityTol = 1e-12;

double penalty_coefficient(const TabularMdp& sim) {
    return sim.gamma * sim.r_max / (1.0 - sim.gamma);
}

void require_augmented(const PolicyTable& policy, const TabularMdp& sim) {
    if (policy.state_space() != StateSpace::augmented || policy.n_rows() != 2 * sim.n_states ||
        policy.n_actions() != sim.n_actions)
        throw std::invalid_argument("policy does not match the augmented model");
}

}  // namespace

Eigen::VectorXd discounted_error_mass(const TabularMdp& sim, const ErrorBound& error,
                                      const PolicyTable& policy) {
    require_augmented(policy, sim);
    return policy_values(sim, policy.restrict_track(1), error.e);
}

double surrogate_gap(const TabularMdp& true_mdp, const TabularMdp& sim, const ErrorBound& error,
                     const PolicyTable& policy, double lambda, double m_b) {
    if (!bound_is_valid(error, true_mismeasure(true_mdp, sim), kValidityTol))
        throw std::invalid_argument("error bound is below the true mis-measure");
    const AugmentedMdp truth =
        AugmentedMdp::mixed(sim, true_mdp, error, lambda, RewardMode::plain);
    const AugmentedMdp surrogate =
        AugmentedMdp::simulated(sim, error, lambda, RewardMode::penalized);
    const double l = augmented_return(truth, policy) - lambda * m_b;
    const double l_hat = augmented_return(surrogate, policy) - lambda * m_b;
    return l - l_hat;
}

bool feasibility_certificate(const TabularMdp& sim, const ErrorBound& error,
                             const PolicyTable& policy, double m_b) {
    require_augmented(policy, sim);
    return penalized_return(sim, error, policy.restrict_track(1)) >= m_b - kFeasibleSlack;
}

double bellman_residual(const TabularMdp& true_mdp, const TabularMdp& sim, const ErrorBound& error,
                        const PolicyTable& policy, double lambda, TrackCoupling coupling) {
    const AugmentedMdp aug = AugmentedMdp::mixed(sim, true_mdp, error, lambda, RewardMode::plain);
    const ValueTable v = evaluate_policy_aug(aug, policy);
    if (coupling == TrackCoupling::independent)
        return (bellman_optimal_apply(aug, v).values - v.values).cwiseAbs().maxCoeff();

    const auto n = static_cast<Eigen::Index>(sim.n_states);
    const Eigen::MatrixXd q = lookahead(aug, v);
    const Eigen::VectorXd best = (q.topRows(n) + q.bottomRows(n)).rowwise().maxCoeff();
    return (best - v.values.head(n) - v.values.tail(n)).cwiseAbs().maxCoeff();
}

double br_upper_bound(const TabularMdp& sim, const ErrorBound& error, const PolicyTable& policy,
                      double lambda) {
    const double c = penalty_coefficient(sim);
    const Eigen::VectorXd mass = discounted_error_mass(sim, error, policy);
    const Eigen::VectorXd worst_e = error.e.rowwise().maxCoeff();
    const Eigen::VectorXd terms =
        2.0 * (1.0 + sim.gamma) * lambda * c * mass + 4.0 * lambda * c * worst_e;
    return std::max(0.0, terms.maxCoeff());
}

PerformanceReport suboptimality_bound(const TabularMdp& sim, const ErrorBound& error,
                                      const SaddleSolution& solution,
                                      const std::optional<TabularMdp>& true_mdp,
                                      TrackCoupling coupling) {
    const PolicyTable& mu = solution.policy_hat;
    const double lambda = solution.lambda_hat;
    const double c = penalty_coefficient(sim);

    PerformanceReport report;
    report.penalty_term =
        2.0 * lambda * c * policy_return(sim, mu.restrict_track(1), error.e);
    report.br_upper = br_upper_bound(sim, error, mu, lambda);
    report.suboptimality_bound = report.penalty_term + report.br_upper / (1.0 - sim.gamma);
    if (true_mdp)
        report.br_exact = bellman_residual(*true_mdp, sim, error, mu, lambda, coupling);
    report.sim_return_track0 = policy_return(sim, mu.restrict_track(0));
    report.sim_return_track1 = policy_return(sim, mu.restrict_track(1));
    report.penalized_return_track1 = penalized_return(sim, error, mu.restrict_track(1));
    report.feasible_certified = report.penalized_return_track1 >= solution.m_b - kFeasibleSlack;
    return report;
}

}  // namespace safepi
