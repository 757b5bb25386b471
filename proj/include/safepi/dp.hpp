#pragma once

#include "safepi/augmented.hpp"

#include <vector>

namespace safepi {

struct BellmanConfig {
    double value_iter_tol = 1e-10;
    std::size_t max_value_iters = 1'000'000;
    double tie_tol = 1e-9;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/**
 * How the greedy step picks actions on the two tracks.
 *
 * `independent` maximizes each (x, i) row separately. `shared` picks one
 * action per base state x maximizing Q(x,0,a) + Q(x,1,a), so the returned
 * policy is identical on both tracks. When both tracks follow the same
 * dynamics, policy iteration with `shared` solves the plain MDP whose reward is
 * the sum of the two track rewards.
 */
enum class TrackCoupling { independent, shared };

/// One-step lookahead Q(s, a) = r(s, a) + gamma sum_s' P^aug(s'|s,a) v(s'), 2n x m.
Eigen::MatrixXd lookahead(const AugmentedMdp& aug, const ValueTable& v);

/// T[v](s) = max_a Q(s, a), per augmented state.
ValueTable bellman_optimal_apply(const AugmentedMdp& aug, const ValueTable& v);

/// T^mu[v](s) = sum_a mu(a|s) Q(s, a).
ValueTable bellman_policy_apply(const AugmentedMdp& aug, const PolicyTable& policy,
                                const ValueTable& v);

/// Fixed point of T^mu by a direct linear solve.
ValueTable evaluate_policy_aug(const AugmentedMdp& aug, const PolicyTable& policy);

struct ValueIterationResult {
    ValueTable values;
    std::size_t iterations = 0;
    std::vector<double> deltas;  // sup-norm change of each sweep
};

/// Iterates T until the sup-norm change drops to cfg.value_iter_tol.
/// Throws std::runtime_error after cfg.max_value_iters sweeps.
ValueIterationResult value_iteration(const AugmentedMdp& aug, const ValueTable& v0,
                                     const BellmanConfig& cfg);

/// Deterministic greedy policy for `v`. Keeps the incumbent's action wherever it is
/// within cfg.tie_tol of the maximum, else takes the lowest attaining index.
PolicyTable greedy_improve(const AugmentedMdp& aug, const ValueTable& v,
                           const PolicyTable& incumbent, const BellmanConfig& cfg,
                           TrackCoupling coupling = TrackCoupling::independent);

}  // namespace safepi
