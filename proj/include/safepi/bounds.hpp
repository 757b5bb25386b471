#pragma once

#include "safepi/saddle.hpp"

#include <optional>

namespace safepi {

struct PerformanceReport {
    double penalty_term = 0.0;
    double br_upper = 0.0;
    double suboptimality_bound = 0.0;
    std::optional<double> br_exact;
    bool feasible_certified = false;
    /// Simulated returns of the two track restrictions of the policy and the
    /// penalized track-1 return that feeds the certificate.
    double sim_return_track0 = 0.0;
    double sim_return_track1 = 0.0;
    double penalized_return_track1 = 0.0;
};

/// E_P^[sum gamma^k e(x_k, a_k) | x_0 = x] under the track-1 restriction, per start state.
Eigen::VectorXd discounted_error_mass(const TabularMdp& sim, const ErrorBound& error,
                                      const PolicyTable& policy);

/// L(mu, lambda) - L^(mu, lambda). Throws std::invalid_argument when `error`
/// does not dominate the true mis-measure.
double surrogate_gap(const TabularMdp& true_mdp, const TabularMdp& sim, const ErrorBound& error,
                     const PolicyTable& policy, double lambda, double m_b);

/// Penalized simulated return of the track-1 restriction is at least m_b - 1e-9.
bool feasibility_certificate(const TabularMdp& sim, const ErrorBound& error,
                             const PolicyTable& policy, double m_b);

/**
 * ||T_lambda[V^mu] - V^mu||_inf under the true-track augmented model with r_lambda.
 *
 * With `independent` coupling T maximizes every (x, i) row. With `shared`
 * coupling the action is common to both tracks, so the residual is taken on
 * the track sum: max_a (Q(x,0,a) + Q(x,1,a)) - (V(x,0) + V(x,1)).
 */
double bellman_residual(const TabularMdp& true_mdp, const TabularMdp& sim, const ErrorBound& error,
                        const PolicyTable& policy, double lambda,
                        TrackCoupling coupling = TrackCoupling::independent);

/// max_x [ 2(1+gamma) lambda c E(x) + max_a 4 lambda c e(x,a) ], c = gamma r_max / (1 - gamma).
double br_upper_bound(const TabularMdp& sim, const ErrorBound& error, const PolicyTable& policy,
                      double lambda);

/// Performance report for a solver output. Passing the true model fills br_exact.
PerformanceReport suboptimality_bound(const TabularMdp& sim, const ErrorBound& error,
                                      const SaddleSolution& solution,
                                      const std::optional<TabularMdp>& true_mdp = std::nullopt,
                                      TrackCoupling coupling = TrackCoupling::shared);

}  // namespace safepi
