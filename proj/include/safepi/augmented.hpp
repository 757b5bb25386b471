#pragma once

#include "safepi/estimation.hpp"
#include "safepi/mdp.hpp"

#include <optional>
#include <utility>

namespace safepi {

/// Stage reward used on the augmented model: r_lambda, or the penalized r^_lambda.
enum class RewardMode { plain, penalized };

/// Dynamics of the i = 1 track: P^ on both tracks, or the true P on track 1.
enum class TrackDynamics { simulated, mixed };

/**
 * Two-track MDP over states (x, i), i in {0, 1}, stored at index x + i * n.
 *
 * Track 0 always evolves under the simulated model P^ with reward 2 r(x,a).
 * Track 1 carries the multiplier: reward 2 lambda r(x,a) (minus the
 * mis-measure penalty in penalized mode) and evolves under P^ (simulated
 * dynamics) or the true P (mixed dynamics). The start distribution puts
 * P_0(x)/2 on each track, so the augmented return of a policy equals
 * E_P^[track-0 return] + lambda * E[track-1 return].
 *
 * Rewards and transition matrices are materialized at construction.
 */
class AugmentedMdp {
public:
    AugmentedMdp(TabularMdp sim, ErrorBound error, double lambda, RewardMode mode,
                 TrackDynamics dynamics = TrackDynamics::simulated,
                 std::optional<TabularMdp> truth = std::nullopt);

    /// P^aug with r_lambda or r^_lambda on the simulated model only.
    static AugmentedMdp simulated(TabularMdp sim, ErrorBound error, double lambda,
                                  RewardMode mode = RewardMode::penalized);
    /// P^aug whose track 1 follows the true model.
    static AugmentedMdp mixed(TabularMdp sim, TabularMdp truth, ErrorBound error, double lambda,
                              RewardMode mode = RewardMode::plain);

    std::size_t n_base_states() const { return sim_.n_states; }
    std::size_t n_states() const { return 2 * sim_.n_states; }
    std::size_t n_actions() const { return sim_.n_actions; }
    double gamma() const { return sim_.gamma; }
    double lambda() const { return lambda_; }
    RewardMode reward_mode() const { return mode_; }
    TrackDynamics dynamics() const { return dynamics_; }
    bool tracks_share_dynamics() const { return dynamics_ == TrackDynamics::simulated; }

    const TabularMdp& base_sim() const { return sim_; }
    const std::optional<TabularMdp>& base_true() const { return truth_; }
    const ErrorBound& error() const { return error_; }

    std::size_t index(std::size_t x, int track) const {
        return x + static_cast<std::size_t>(track) * sim_.n_states;
    }

    /// Reward of the configured mode at augmented state `s`.
    double reward(std::size_t s, std::size_t a) const {
        return rewards_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    }
    const Eigen::MatrixXd& rewards() const { return rewards_; }
    /// 2n x 2n transition matrix for action `a`, block diagonal by track.
    const Eigen::MatrixXd& transitions(std::size_t a) const { return transitions_[a]; }

    /// P0^aug(x, i) = P_0(x) / 2.
    Eigen::VectorXd start_distribution() const;

    /// Same model with a different multiplier.
    AugmentedMdp with_lambda(double lambda) const;

    /// (1 - gamma)-scaled mis-measure penalty coefficient gamma * r_max / (1 - gamma).
    double penalty_coefficient() const { return sim_.gamma * sim_.r_max / (1.0 - sim_.gamma); }

private:
    void materialize();

    TabularMdp sim_;
    std::optional<TabularMdp> truth_;
    ErrorBound error_;
    double lambda_;
    RewardMode mode_;
    TrackDynamics dynamics_;
    Eigen::MatrixXd rewards_;
    std::vector<Eigen::MatrixXd> transitions_;
};

/// r_lambda(x, i, a): 2 r(x,a) on track 0, 2 lambda r(x,a) on track 1.
double reward_lambda(const AugmentedMdp& aug, std::size_t x, int track, std::size_t a);

/// r^_lambda(x, i, a): as r_lambda, minus (2 gamma lambda r_max / (1 - gamma)) e(x,a) on track 1.
double reward_hat_lambda(const AugmentedMdp& aug, std::size_t x, int track, std::size_t a);

/// Next-state distribution over the 2n augmented states.
/// `dynamics` selects P^aug (mixed) or P^^aug (simulated); mixed needs the true model.
Eigen::VectorXd transition_aug(const AugmentedMdp& aug, std::size_t x, int track, std::size_t a,
                               TrackDynamics dynamics);
Eigen::VectorXd transition_aug(const AugmentedMdp& aug, std::size_t x, int track, std::size_t a);

/// Augmented return sum_{x,i} P0^aug(x,i) V^mu(x,i) under the configured reward and dynamics.
double augmented_return(const AugmentedMdp& aug, const PolicyTable& policy);

/// Returns (augmented return under P^aug with r_lambda,
///          E_P^[track-0 return] + lambda E_P[track-1 return]) computed separately.
std::pair<double, double> lagrangian_identity_check(const AugmentedMdp& aug,
                                                    const PolicyTable& policy);

}  // namespace safepi
