#pragma once

#include "safepi/mdp.hpp"

#include <cstdint>
#include <vector>

namespace safepi {

struct Transition {
    std::size_t x = 0;
    std::size_t a = 0;
    std::size_t y = 0;
    friend bool operator==(const Transition&, const Transition&) = default;
};

/// Observed (x, a, y) triples together with the visit counts N(x, a).
struct TrajectoryBatch {
    std::vector<Transition> transitions_observed;
    Eigen::MatrixXd counts;  // n_states x n_actions, integral values

    /// Rebuilds `counts` from the triples; throws on an out-of-range index.
    static TrajectoryBatch from_triples(std::vector<Transition> triples, std::size_t n_states,
                                        std::size_t n_actions);

    std::size_t n_states() const { return static_cast<std::size_t>(counts.rows()); }
    std::size_t n_actions() const { return static_cast<std::size_t>(counts.cols()); }

    friend bool operator==(const TrajectoryBatch& a, const TrajectoryBatch& b) {
        return a.transitions_observed == b.transitions_observed && a.counts == b.counts;
    }
};

/// Per (x, a) upper bound on the L1 distance between true and simulated rows.
struct ErrorBound {
    Eigen::MatrixXd e;  // n_states x n_actions, entries in [0, 2]

    static ErrorBound zeros(std::size_t n_states, std::size_t n_actions);
    std::vector<std::string> validate() const;
};

/// Rolls out `baseline` in `true_mdp`, restarting from P_0 every `episode_length` steps.
TrajectoryBatch simulate_trajectories(const TabularMdp& true_mdp, const PolicyTable& baseline,
                                      std::size_t n_steps, std::size_t episode_length,
                                      std::uint64_t seed);

/// Additive-smoothing frequency estimate of P; rewards, gamma, r_max and P_0 come from `template_mdp`.
/// With smoothing 0 a row without data falls back to uniform.
TabularMdp estimate_model(const TrajectoryBatch& batch, const TabularMdp& template_mdp,
                          double smoothing);

/// Default additive prior, 1 / n_states.
inline double default_smoothing(std::size_t n_states) { return 1.0 / static_cast<double>(n_states); }

/// L1 concentration radius for an empirical distribution over `n_states` outcomes
/// from `count` samples, at per-pair failure probability `delta_pair`.
double l1_radius(double count, std::size_t n_states, double delta_pair);

/// e(x,a) = min(2, sqrt(2 (ln(2^n - 2) - ln delta') / N(x,a))) with
/// delta' = confidence_delta / (n_states n_actions); e = 2 where N = 0.
ErrorBound l1_error_bound(const TrajectoryBatch& batch, std::size_t n_states,
                          double confidence_delta);

/// Exact sum_y |P(y|x,a) - P^(y|x,a)|.
ErrorBound true_mismeasure(const TabularMdp& true_mdp, const TabularMdp& sim_mdp);

/// True when e(x,a) >= true mis-measure at every pair (up to `tol`).
bool bound_is_valid(const ErrorBound& bound, const ErrorBound& mismeasure, double tol = 0.0);

}  // namespace safepi
