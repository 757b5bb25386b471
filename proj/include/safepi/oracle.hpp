#pragma once

#include "safepi/bounds.hpp"
#include "safepi/lp.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace safepi {

/// Upper limit on the number of policies an enumeration may visit.
inline constexpr double kEnumerationGuard = 1e7;

/// Walks every deterministic policy in lexicographic order (state 0 most significant).
class PolicyEnumerator {
public:
    /// Throws std::length_error when n_actions^rows exceeds the guard.
    PolicyEnumerator(std::size_t n_states, std::size_t n_actions, bool augmented);

    /// Writes the next policy into `out`; false once every policy was produced.
    bool next(PolicyTable& out);
    std::size_t count() const { return count_; }

private:
    std::size_t n_rows_;
    std::size_t n_actions_;
    StateSpace space_;
    std::size_t count_;
    std::vector<std::size_t> digits_;
    bool started_ = false;
    bool done_ = false;
};

/// All deterministic policies, in the enumerator's order.
std::vector<PolicyTable> enumerate_policies(std::size_t n_states, std::size_t n_actions,
                                            bool augmented);

struct OracleResult {
    PolicyTable best_policy;   // plain deterministic constrained optimum
    double primal_value = 0.0; // E_P^[return] of best_policy
    double dual_value = 0.0;   // min_lambda max_mu of the single-policy Lagrangian
    double duality_gap = 0.0;
    double lambda_star = 0.0;
    std::size_t enumerated_count = 0;
    bool feasible = false;
    /// Occupation-measure LP over the two-track set; decouples the tracks so it
    /// upper-bounds primal_value.
    std::optional<double> lp_relaxation_value;
};

/// max E_P^[return] subject to E_P[return] >= m_b over deterministic plain policies.
/// Infeasibility is reported through `feasible`, not thrown.
OracleResult exact_constrained_optimum(const TabularMdp& true_mdp, const TabularMdp& sim,
                                       double m_b);

/// Line a + b lambda of a policy in a Lagrangian dual.
struct DualLine {
    double intercept = 0.0;
    double slope = 0.0;
};

/// argmin over [0, lambda_max] of the upper envelope of `lines`, and its value.
std::pair<double, double> minimize_upper_envelope(const std::vector<DualLine>& lines,
                                                  double lambda_max);

/// Exact min over lambda of the surrogate dual by enumerating deterministic plain policies.
std::pair<double, double> exact_surrogate_dual(const TabularMdp& sim, const ErrorBound& error,
                                               double m_b, double lambda_max);

/// Evaluates f on `lambda_grid` and, if `refine`, runs a golden-section search in
/// the bracket around the grid minimizer. Returns (lambda_star, f_star).
std::pair<double, double> dual_grid_search(const TabularMdp& sim, const ErrorBound& error,
                                           double m_b, const std::vector<double>& lambda_grid,
                                           const SaddleConfig& cfg = {}, bool refine = true);

/// Uniform grid {0, step, 2 step, ...} up to and including `upper`.
std::vector<double> lambda_grid(double upper, double step);

/// max over the two-track occupation set of the track-0 objective subject to
/// the track-1 return meeting m_b. Empty when infeasible.
std::optional<double> augmented_lp_primal(const TabularMdp& true_mdp, const TabularMdp& sim,
                                          double m_b);

/// Single-policy occupation LP under P^ with the penalized constraint. Empty when infeasible.
std::optional<double> surrogate_lp_primal(const TabularMdp& sim, const ErrorBound& error,
                                          double m_b);

struct DualityCheck {
    double primal = 0.0;
    double dual = 0.0;
    double lambda_star = 0.0;
    double gap = 0.0;
    bool primal_feasible = false;
};

/// |min_lambda max_mu L - max_mu min_lambda L| on the true-track augmented model.
DualityCheck strong_duality_gap(const TabularMdp& true_mdp, const TabularMdp& sim, double m_b,
                                const std::vector<double>& lambda_grid);

/// Same check for the penalized surrogate problem the solver optimizes.
DualityCheck surrogate_duality_gap(const TabularMdp& sim, const ErrorBound& error, double m_b,
                                   const std::vector<double>& lambda_grid,
                                   const SaddleConfig& cfg = {});

/// Random MDP: rewards U[-1, 1] (r_max = 1), Dirichlet(1) transition rows.
TabularMdp random_mdp(std::size_t n_states, std::size_t n_actions, double gamma,
                      std::uint64_t seed);

struct InstanceSpec {
    std::size_t n_states = 4;
    std::size_t n_actions = 3;
    double gamma = 0.9;
    double perturbation = 0.02;  // weight of the random row mixed into P^
    double margin = 1.2;         // e = margin * true mis-measure
    /// Baseline = (1 - q) uniform + q true-optimal; q = 0 is the uniform policy.
    double baseline_quality = 0.0;
};

/// Test problem: true and simulated models, a valid error bound, the baseline
/// and M_B = the baseline's true return.
struct Instance {
    TabularMdp true_mdp;
    TabularMdp sim_mdp;
    ErrorBound error;
    PolicyTable baseline;
    double m_b = 0.0;
};

Instance random_instance(const InstanceSpec& spec, std::uint64_t seed);

/// Some deterministic policy's penalized simulated return exceeds m_b by `slack`.
bool strictly_feasible(const Instance& inst, double slack);

}  // namespace safepi
