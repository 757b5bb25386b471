#include "safepi/augmented.hpp"

#include <stdexcept>

namespace safepi {

namespace {
Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
}  // namespace

AugmentedMdp::AugmentedMdp(TabularMdp sim, ErrorBound error, double lambda, RewardMode mode,
                           TrackDynamics dynamics, std::optional<TabularMdp> truth)
    : sim_(std::move(sim)),
      truth_(std::move(truth)),
      error_(std::move(error)),
      lambda_(lambda),
      mode_(mode),
      dynamics_(dynamics) {
    if (!(lambda_ >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
    if (error_.e.rows() != idx(sim_.n_states) || error_.e.cols() != idx(sim_.n_actions))
        throw std::invalid_argument("error bound shape does not match the simulated model");
    if (dynamics_ == TrackDynamics::mixed && !truth_)
        throw std::invalid_argument("mixed dynamics require the true model");
    if (truth_ && (truth_->n_states != sim_.n_states || truth_->n_actions != sim_.n_actions))
        throw std::invalid_argument("true and simulated models differ in dimensions");
    materialize();
}

AugmentedMdp AugmentedMdp::simulated(TabularMdp sim, ErrorBound error, double lambda,
                                     RewardMode mode) {
    return {std::move(sim), std::move(error), lambda, mode, TrackDynamics::simulated};
}

AugmentedMdp AugmentedMdp::mixed(TabularMdp sim, TabularMdp truth, ErrorBound error,
                                 double lambda, RewardMode mode) {
    return {std::move(sim), std::move(error), lambda, mode, TrackDynamics::mixed,
            std::move(truth)};
}

AugmentedMdp AugmentedMdp::with_lambda(double lambda) const {
    return {sim_, error_, lambda, mode_, dynamics_, truth_};
}

void AugmentedMdp::materialize() {
    const auto n = idx(sim_.n_states);
    const auto m = idx(sim_.n_actions);
    rewards_.resize(2 * n, m);
    rewards_.topRows(n) = 2.0 * sim_.rewards;
    rewards_.bottomRows(n) = 2.0 * lambda_ * sim_.rewards;
    if (mode_ == RewardMode::penalized)
        rewards_.bottomRows(n) -= 2.0 * lambda_ * penalty_coefficient() * error_.e;

    const TabularMdp& track1 = dynamics_ == TrackDynamics::mixed ? *truth_ : sim_;
    transitions_.assign(sim_.n_actions, Eigen::MatrixXd::Zero(2 * n, 2 * n));
    for (std::size_t a = 0; a < sim_.n_actions; ++a) {
        transitions_[a].topLeftCorner(n, n) = sim_.transitions[a];
        transitions_[a].bottomRightCorner(n, n) = track1.transitions[a];
    }
}

Eigen::VectorXd AugmentedMdp::start_distribution() const {
    const auto n = idx(sim_.n_states);
    Eigen::VectorXd p0(2 * n);
    const Eigen::VectorXd base = sim_.start_distribution();
    p0.head(n) = 0.5 * base;
    p0.tail(n) = 0.5 * base;
    return p0;
}

double reward_lambda(const AugmentedMdp& aug, std::size_t x, int track, std::size_t a) {
    const double r = aug.base_sim().reward(x, a);
    return track == 0 ? 2.0 * r : 2.0 * aug.lambda() * r;
}

double reward_hat_lambda(const AugmentedMdp& aug, std::size_t x, int track, std::size_t a) {
    if (track == 0) return reward_lambda(aug, x, 0, a);
    const double e = aug.error().e(idx(x), idx(a));
    return reward_lambda(aug, x, 1, a) - 2.0 * aug.lambda() * aug.penalty_coefficient() * e;
}

Eigen::VectorXd transition_aug(const AugmentedMdp& aug, std::size_t x, int track, std::size_t a,
                               TrackDynamics dynamics) {
    if (dynamics == TrackDynamics::mixed && !aug.base_true())
        throw std::invalid_argument("true-model track requested but no true model is attached");
    const auto n = idx(aug.n_base_states());
    const TabularMdp& model =
        (track == 1 && dynamics == TrackDynamics::mixed) ? *aug.base_true() : aug.base_sim();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n);
    out.segment(track == 0 ? 0 : n, n) = model.transitions[a].row(idx(x)).transpose();
    return out;
}

Eigen::VectorXd transition_aug(const AugmentedMdp& aug, std::size_t x, int track, std::size_t a) {
    return transition_aug(aug, x, track, a, aug.dynamics());
}

double augmented_return(const AugmentedMdp& aug, const PolicyTable& policy) {
    if (policy.state_space() != StateSpace::augmented || policy.n_rows() != aug.n_states() ||
        policy.n_actions() != aug.n_actions())
        throw std::invalid_argument("policy does not match the augmented model");
    const auto ns = idx(aug.n_states());
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(ns, ns);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(ns);
    for (std::size_t s = 0; s < aug.n_states(); ++s)
        for (std::size_t a = 0; a < aug.n_actions(); ++a) {
            const double w = policy.probability(s, a);
            if (w == 0.0) continue;
            p.row(idx(s)) += w * aug.transitions(a).row(idx(s));
            r(idx(s)) += w * aug.reward(s, a);
        }
    return aug.start_distribution().dot(solve_discounted(p, r, aug.gamma()));
}

std::pair<double, double> lagrangian_identity_check(const AugmentedMdp& aug,
                                                    const PolicyTable& policy) {
    if (!aug.base_true()) throw std::invalid_argument("lagrangian identity needs the true model");
    const AugmentedMdp plain_mixed =
        AugmentedMdp::mixed(aug.base_sim(), *aug.base_true(), aug.error(), aug.lambda(),
                            RewardMode::plain);
    const double augmented = augmented_return(plain_mixed, policy);
    const double direct = policy_return(aug.base_sim(), policy.restrict_track(0)) +
                          aug.lambda() * policy_return(*aug.base_true(), policy.restrict_track(1));
    return {augmented, direct};
}

}  // namespace safepi
