#include "safepi/dp.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace safepi {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void require_values(const AugmentedMdp& aug, const ValueTable& v) {
    if (v.state_space != StateSpace::augmented || v.values.size() != idx(aug.n_states()))
        throw std::invalid_argument(fmt::format("value table has {} entries, expected {} augmented",
                                                v.values.size(), aug.n_states()));
}

void require_policy(const AugmentedMdp& aug, const PolicyTable& policy) {
    if (policy.state_space() != StateSpace::augmented || policy.n_rows() != aug.n_states() ||
        policy.n_actions() != aug.n_actions())
        throw std::invalid_argument("policy does not match the augmented model");
}

// Lowest index within tie_tol of the row maximum, unless `sticky` qualifies.
std::size_t pick(const Eigen::RowVectorXd& q, std::size_t sticky, double tie_tol) {
    const double best = q.maxCoeff();
    if (sticky < static_cast<std::size_t>(q.size()) && q(idx(sticky)) >= best - tie_tol)
        return sticky;
    for (Eigen::Index a = 0; a < q.size(); ++a)
        if (q(a) >= best - tie_tol) return static_cast<std::size_t>(a);
    return 0;
}

}  // namespace

void BellmanConfig::validate() const {
    if (!(value_iter_tol > 0.0)) throw std::invalid_argument("value_iter_tol must be positive");
    if (max_value_iters == 0) throw std::invalid_argument("max_value_iters must be positive");
    if (!(tie_tol >= 0.0)) throw std::invalid_argument("tie_tol must be nonnegative");
}

Eigen::MatrixXd lookahead(const AugmentedMdp& aug, const ValueTable& v) {
    require_values(aug, v);
    Eigen::MatrixXd q(idx(aug.n_states()), idx(aug.n_actions()));
    for (std::size_t a = 0; a < aug.n_actions(); ++a)
        q.col(idx(a)) = aug.rewards().col(idx(a)) + aug.gamma() * (aug.transitions(a) * v.values);
    return q;
}

ValueTable bellman_optimal_apply(const AugmentedMdp& aug, const ValueTable& v) {
    return {lookahead(aug, v).rowwise().maxCoeff(), StateSpace::augmented};
}

ValueTable bellman_policy_apply(const AugmentedMdp& aug, const PolicyTable& policy,
                                const ValueTable& v) {
    require_policy(aug, policy);
    const Eigen::MatrixXd q = lookahead(aug, v);
    return {q.cwiseProduct(policy.probabilities()).rowwise().sum(), StateSpace::augmented};
}

ValueTable evaluate_policy_aug(const AugmentedMdp& aug, const PolicyTable& policy) {
    require_policy(aug, policy);
    const auto ns = idx(aug.n_states());
    const Eigen::MatrixXd probs = policy.probabilities();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(ns, ns);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(ns);
    for (std::size_t a = 0; a < aug.n_actions(); ++a) {
        const Eigen::VectorXd w = probs.col(idx(a));
        p += w.asDiagonal() * aug.transitions(a);
        r += w.cwiseProduct(aug.rewards().col(idx(a)));
    }
    return {solve_discounted(p, r, aug.gamma()), StateSpace::augmented};
}

ValueIterationResult value_iteration(const AugmentedMdp& aug, const ValueTable& v0,
                                     const BellmanConfig& cfg) {
    cfg.validate();
    require_values(aug, v0);
    ValueIterationResult out{v0, 0, {}};
    while (out.iterations < cfg.max_value_iters) {
        ValueTable next = bellman_optimal_apply(aug, out.values);
        const double delta = (next.values - out.values.values).cwiseAbs().maxCoeff();
        out.values = std::move(next);
        ++out.iterations;
        out.deltas.push_back(delta);
        if (delta <= cfg.value_iter_tol) return out;
    }
    throw std::runtime_error(
        fmt::format("value iteration did not converge in {} sweeps", cfg.max_value_iters));
}

PolicyTable greedy_improve(const AugmentedMdp& aug, const ValueTable& v,
                           const PolicyTable& incumbent, const BellmanConfig& cfg,
                           TrackCoupling coupling) {
    require_policy(aug, incumbent);
    const Eigen::MatrixXd q = lookahead(aug, v);
    const std::size_t n = aug.n_base_states();
    const bool has_incumbent = incumbent.kind() == PolicyKind::deterministic;
    const std::size_t none = aug.n_actions();
    std::vector<std::size_t> actions(aug.n_states());

    if (coupling == TrackCoupling::independent) {
        for (std::size_t s = 0; s < aug.n_states(); ++s)
            actions[s] = pick(q.row(idx(s)), has_incumbent ? incumbent.action(s) : none,
                              cfg.tie_tol);
    } else {
        for (std::size_t x = 0; x < n; ++x) {
            const Eigen::RowVectorXd both = q.row(idx(x)) + q.row(idx(x + n));
            const std::size_t a =
                pick(both, has_incumbent ? incumbent.action(x) : none, cfg.tie_tol);
            actions[x] = a;
            actions[x + n] = a;
        }
    }
    return PolicyTable::deterministic(std::move(actions), aug.n_actions(), StateSpace::augmented);
}

}  // namespace safepi
