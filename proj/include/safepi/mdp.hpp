#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace safepi {

/// Tolerance on row sums of transition and policy probability vectors.
inline constexpr double kStochasticTol = 1e-12;
/// Tolerance on residuals of the linear systems solved for values and occupations.
inline constexpr double kLinearResidualTol = 1e-10;
/// Agreement between two independent routes computing the same value.
inline constexpr double kValueTol = 1e-9;

enum class StateSpace { plain, augmented };
enum class PolicyKind { deterministic, stochastic };

/**
 * Finite discounted MDP with expected stage rewards.
 *
 * `transitions[a](x, y)` is P(y | x, a); each row of each matrix is a
 * probability vector. The start distribution is a single atom at
 * `initial_state` unless `initial_distribution` is set, in which case returns
 * are the P_0-weighted average of the per-state values.
 */
struct TabularMdp {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    Eigen::MatrixXd rewards;                   // n_states x n_actions
    double r_max = 1.0;
    std::vector<Eigen::MatrixXd> transitions;  // one n_states x n_states matrix per action
    double gamma = 0.9;
    std::size_t initial_state = 0;
    std::optional<Eigen::VectorXd> initial_distribution;

    double transition(std::size_t x, std::size_t a, std::size_t y) const {
        return transitions[a](static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    }
    double reward(std::size_t x, std::size_t a) const {
        return rewards(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a));
    }

    /// P_0 as a dense vector.
    Eigen::VectorXd start_distribution() const;

    /// Value bound r_max / (1 - gamma).
    double value_bound() const { return r_max / (1.0 - gamma); }
};

/// Allocates an MDP with zero rewards and all-zero transition matrices.
TabularMdp make_empty_mdp(std::size_t n_states, std::size_t n_actions, double gamma,
                          double r_max = 1.0, std::size_t initial_state = 0);

/// Stationary Markov policy over plain states x or augmented states (x, i).
class PolicyTable {
public:
    PolicyTable() = default;

    static PolicyTable deterministic(std::vector<std::size_t> actions, std::size_t n_actions,
                                     StateSpace space = StateSpace::plain);
    static PolicyTable stochastic(Eigen::MatrixXd probabilities,
                                  StateSpace space = StateSpace::plain);
    static PolicyTable uniform(std::size_t n_rows, std::size_t n_actions,
                               StateSpace space = StateSpace::plain);

    /// Same action table on both tracks of an augmented state space.
    static PolicyTable lift(const PolicyTable& plain);
    /// Augmented policy whose track-0 rows come from `track0` and track-1 rows from `track1`.
    static PolicyTable from_tracks(const PolicyTable& track0, const PolicyTable& track1);

    PolicyKind kind() const { return kind_; }
    StateSpace state_space() const { return space_; }
    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_actions() const { return n_actions_; }

    double probability(std::size_t state, std::size_t action) const;
    /// Only valid for deterministic policies.
    std::size_t action(std::size_t state) const;
    const std::vector<std::size_t>& actions() const { return actions_; }
    /// Dense n_rows x n_actions probability table (one-hot rows when deterministic).
    Eigen::MatrixXd probabilities() const;

    /// Plain-state restriction of an augmented policy to track `track`.
    PolicyTable restrict_track(int track) const;
    /// True when an augmented policy picks identical distributions on both tracks.
    bool track_consistent(double tol = 0.0) const;

    /// Violations of the policy invariants; empty when well formed.
    std::vector<std::string> validate() const;

    friend bool operator==(const PolicyTable& a, const PolicyTable& b);

private:
    PolicyKind kind_ = PolicyKind::deterministic;
    StateSpace space_ = StateSpace::plain;
    std::size_t n_rows_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<std::size_t> actions_;
    Eigen::MatrixXd probs_;
};

struct ValueTable {
    Eigen::VectorXd values;
    StateSpace state_space = StateSpace::plain;
};

/// (1 - gamma)-normalized discounted visiting distribution.
struct OccupationMeasure {
    Eigen::VectorXd state;         // d(x)
    Eigen::MatrixXd state_action;  // pi(x, a) = d(x) mu(a | x)
};

/// Lists every broken TabularMdp invariant. Empty iff the model is valid.
std::vector<std::string> validate_mdp(const TabularMdp& mdp);

/// Policy-induced transition matrix P_mu and reward vector r_mu over plain states.
Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const PolicyTable& policy);
Eigen::VectorXd policy_reward_vector(const TabularMdp& mdp, const PolicyTable& policy,
                                     const Eigen::MatrixXd& stage_reward);

/// Solves (I - gamma P) v = r.
Eigen::VectorXd solve_discounted(const Eigen::MatrixXd& transition, const Eigen::VectorXd& reward,
                                 double gamma);

/// Exact V^mu for the stage reward `stage_reward` (n_states x n_actions).
Eigen::VectorXd policy_values(const TabularMdp& mdp, const PolicyTable& policy,
                              const Eigen::MatrixXd& stage_reward);
Eigen::VectorXd policy_values(const TabularMdp& mdp, const PolicyTable& policy);

/// Expected discounted return from P_0 under `policy`.
double policy_return(const TabularMdp& mdp, const PolicyTable& policy);
/// Same, with an arbitrary stage reward in place of `mdp.rewards`.
double policy_return(const TabularMdp& mdp, const PolicyTable& policy,
                     const Eigen::MatrixXd& stage_reward);

/// Solves (I - gamma P_mu)^T d = (1 - gamma) P_0.
OccupationMeasure occupation_measure(const TabularMdp& mdp, const PolicyTable& policy);

/// M_B: the baseline policy's return in the true model.
double baseline_threshold(const TabularMdp& true_mdp, const PolicyTable& baseline);

/// Optimal values and a greedy deterministic policy by policy iteration.
struct PlainSolution {
    Eigen::VectorXd values;
    PolicyTable policy;
};
PlainSolution solve_optimal(const TabularMdp& mdp, const Eigen::MatrixXd& stage_reward);
PlainSolution solve_optimal(const TabularMdp& mdp);

/// Applies a state relabelling: new state k is old state perm[k].
TabularMdp permute_states(const TabularMdp& mdp, const std::vector<std::size_t>& perm);

}  // namespace safepi
