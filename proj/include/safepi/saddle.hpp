#pragma once

#include "safepi/dp.hpp"

#include <optional>
#include <vector>

namespace safepi {

struct SaddleConfig {
    double lambda0 = 0.0;
    /// Projection cap; unset means 4 r_max / (1 - gamma) of the simulated model.
    std::optional<double> lambda_max;
    /// alpha_j = step_alpha0 / (j + 1); unset means (1 - gamma) / r_max.
    std::optional<double> step_alpha0;
    double outer_tol = 1e-5;
    std::size_t outer_patience = 25;
    std::size_t max_outer_iters = 200'000;
    BellmanConfig bellman;
    /// Revert to the previous multiplier when the dual value did not improve.
    bool literal_best_lambda = true;
    TrackCoupling track_coupling = TrackCoupling::shared;
    /// After the subgradient loop, locate the kink of f next to the best multiplier
    /// and return the multiplier and policy on its feasible side.
    bool feasible_side_extraction = true;

    double resolved_lambda_max(const TabularMdp& sim) const;
    double resolved_step_alpha0(const TabularMdp& sim) const;
    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct InnerResult {
    PolicyTable policy;
    ValueTable values;
    std::size_t iterations = 0;  // evaluate/improve sweeps
};

/// Exact policy iteration on `aug` from `initial_policy` (deterministic, augmented).
InnerResult inner_policy_iteration(const AugmentedMdp& aug, const PolicyTable& initial_policy,
                                   const SaddleConfig& cfg);

struct DualEvaluation {
    double lambda = 0.0;
    double f = 0.0;                // max_mu L^(mu, lambda)
    double g = 0.0;                // penalized track-1 return minus m_b
    PolicyTable policy;
    std::size_t inner_iterations = 0;
};

/// f(lambda) and a subgradient at lambda. `warm_start` seeds the inner loop.
DualEvaluation dual_value_and_subgradient(const TabularMdp& sim, const ErrorBound& error,
                                          double lambda, double m_b, const SaddleConfig& cfg,
                                          const PolicyTable* warm_start = nullptr);

/// Penalized simulated return E_P^[sum gamma^k (r - gamma r_max / (1 - gamma) e)] of a plain policy.
double penalized_return(const TabularMdp& sim, const ErrorBound& error, const PolicyTable& plain);

struct SaddleSolution {
    PolicyTable policy_hat;
    double lambda_hat = 0.0;
    double dual_value = 0.0;
    double m_b = 0.0;
    double lambda_max = 0.0;
    std::vector<double> f_min_trace;
    std::vector<double> lambda_trace;
    std::vector<double> subgradient_trace;
    std::vector<std::size_t> inner_iterations;
    bool feasible = false;
    bool converged = false;
    std::size_t outer_iterations = 0;
};

/// Projected subgradient descent on the dual with exact inner policy iteration.
SaddleSolution solve_saddle(const TabularMdp& sim, const ErrorBound& error, double m_b,
                            const SaddleConfig& cfg = {});

}  // namespace safepi
