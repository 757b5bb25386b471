#include "safepi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace safepi {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void require_compatible(const TabularMdp& mdp, const PolicyTable& policy) {
    if (policy.state_space() != StateSpace::plain)
        throw std::invalid_argument("policy must be over plain states");
    if (policy.n_rows() != mdp.n_states || policy.n_actions() != mdp.n_actions)
        throw std::invalid_argument(fmt::format(
            "policy dimensions {}x{} do not match MDP {}x{}", policy.n_rows(),
            policy.n_actions(), mdp.n_states, mdp.n_actions));
}

}  // namespace

Eigen::VectorXd TabularMdp::start_distribution() const {
    if (initial_distribution) return *initial_distribution;
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(idx(n_states));
    p0(idx(initial_state)) = 1.0;
    return p0;
}

TabularMdp make_empty_mdp(std::size_t n_states, std::size_t n_actions, double gamma, double r_max,
                          std::size_t initial_state) {
    TabularMdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.r_max = r_max;
    mdp.initial_state = initial_state;
    mdp.rewards = Eigen::MatrixXd::Zero(idx(n_states), idx(n_actions));
    mdp.transitions.assign(n_actions, Eigen::MatrixXd::Zero(idx(n_states), idx(n_states)));
    return mdp;
}

// ---------------------------------------------------------------------------
// PolicyTable

PolicyTable PolicyTable::deterministic(std::vector<std::size_t> actions, std::size_t n_actions,
                                       StateSpace space) {
    PolicyTable p;
    p.kind_ = PolicyKind::deterministic;
    p.space_ = space;
    p.n_rows_ = actions.size();
    p.n_actions_ = n_actions;
    p.actions_ = std::move(actions);
    return p;
}

PolicyTable PolicyTable::stochastic(Eigen::MatrixXd probabilities, StateSpace space) {
    PolicyTable p;
    p.kind_ = PolicyKind::stochastic;
    p.space_ = space;
    p.n_rows_ = static_cast<std::size_t>(probabilities.rows());
    p.n_actions_ = static_cast<std::size_t>(probabilities.cols());
    p.probs_ = std::move(probabilities);
    return p;
}

PolicyTable PolicyTable::uniform(std::size_t n_rows, std::size_t n_actions, StateSpace space) {
    return stochastic(Eigen::MatrixXd::Constant(idx(n_rows), idx(n_actions),
                                                1.0 / static_cast<double>(n_actions)),
                      space);
}

PolicyTable PolicyTable::lift(const PolicyTable& plain) {
    if (plain.state_space() != StateSpace::plain)
        throw std::invalid_argument("lift expects a plain-state policy");
    return from_tracks(plain, plain);
}

PolicyTable PolicyTable::from_tracks(const PolicyTable& track0, const PolicyTable& track1) {
    if (track0.n_rows() != track1.n_rows() || track0.n_actions() != track1.n_actions())
        throw std::invalid_argument("track policies differ in shape");
    if (track0.kind() == PolicyKind::deterministic && track1.kind() == PolicyKind::deterministic) {
        std::vector<std::size_t> acts = track0.actions_;
        acts.insert(acts.end(), track1.actions_.begin(), track1.actions_.end());
        return deterministic(std::move(acts), track0.n_actions(), StateSpace::augmented);
    }
    const auto n = idx(track0.n_rows());
    Eigen::MatrixXd probs(2 * n, idx(track0.n_actions()));
    probs.topRows(n) = track0.probabilities();
    probs.bottomRows(n) = track1.probabilities();
    return stochastic(std::move(probs), StateSpace::augmented);
}

double PolicyTable::probability(std::size_t state, std::size_t action) const {
    if (kind_ == PolicyKind::deterministic) return actions_[state] == action ? 1.0 : 0.0;
    return probs_(idx(state), idx(action));
}

std::size_t PolicyTable::action(std::size_t state) const {
    if (kind_ != PolicyKind::deterministic)
        throw std::logic_error("action() called on a stochastic policy");
    return actions_[state];
}

Eigen::MatrixXd PolicyTable::probabilities() const {
    if (kind_ == PolicyKind::stochastic) return probs_;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(idx(n_rows_), idx(n_actions_));
    for (std::size_t s = 0; s < n_rows_; ++s) out(idx(s), idx(actions_[s])) = 1.0;
    return out;
}

PolicyTable PolicyTable::restrict_track(int track) const {
    if (space_ != StateSpace::augmented)
        throw std::invalid_argument("restrict_track needs an augmented policy");
    if (track != 0 && track != 1) throw std::invalid_argument("track must be 0 or 1");
    const std::size_t n = n_rows_ / 2;
    const std::size_t offset = track == 0 ? 0 : n;
    if (kind_ == PolicyKind::deterministic) {
        std::vector<std::size_t> acts(actions_.begin() + static_cast<std::ptrdiff_t>(offset),
                                      actions_.begin() + static_cast<std::ptrdiff_t>(offset + n));
        return deterministic(std::move(acts), n_actions_, StateSpace::plain);
    }
    return stochastic(probs_.middleRows(idx(offset), idx(n)), StateSpace::plain);
}

bool PolicyTable::track_consistent(double tol) const {
    if (space_ != StateSpace::augmented) return true;
    const std::size_t n = n_rows_ / 2;
    if (kind_ == PolicyKind::deterministic)
        return std::equal(actions_.begin(), actions_.begin() + static_cast<std::ptrdiff_t>(n),
                          actions_.begin() + static_cast<std::ptrdiff_t>(n));
    return (probs_.topRows(idx(n)) - probs_.bottomRows(idx(n))).cwiseAbs().maxCoeff() <= tol;
}

std::vector<std::string> PolicyTable::validate() const {
    std::vector<std::string> out;
    if (space_ == StateSpace::augmented && n_rows_ % 2 != 0)
        out.push_back(fmt::format("augmented policy has odd row count {}", n_rows_));
    if (kind_ == PolicyKind::deterministic) {
        for (std::size_t s = 0; s < n_rows_; ++s)
            if (actions_[s] >= n_actions_)
                out.push_back(fmt::format("row {} selects invalid action {}", s, actions_[s]));
        return out;
    }
    for (std::size_t s = 0; s < n_rows_; ++s) {
        const auto row = probs_.row(idx(s));
        if (row.minCoeff() < 0.0) out.push_back(fmt::format("row {} has a negative entry", s));
        const double sum = row.sum();
        if (std::abs(sum - 1.0) > kStochasticTol)
            out.push_back(fmt::format("row {} sums to {}", s, sum));
    }
    return out;
}

bool operator==(const PolicyTable& a, const PolicyTable& b) {
    if (a.kind_ != b.kind_ || a.space_ != b.space_ || a.n_rows_ != b.n_rows_ ||
        a.n_actions_ != b.n_actions_)
        return false;
    if (a.kind_ == PolicyKind::deterministic) return a.actions_ == b.actions_;
    return a.probs_ == b.probs_;
}

// ---------------------------------------------------------------------------
// Model checks and evaluation

std::vector<std::string> validate_mdp(const TabularMdp& mdp) {
    std::vector<std::string> out;
    if (mdp.n_states == 0) out.emplace_back("n_states must be positive");
    if (mdp.n_actions == 0) out.emplace_back("n_actions must be positive");
    if (!(mdp.gamma > 0.0 && mdp.gamma < 1.0)) out.emplace_back("gamma not in (0,1)");
    if (!(mdp.r_max > 0.0)) out.emplace_back("r_max must be positive");
    if (mdp.initial_state >= mdp.n_states)
        out.push_back(fmt::format("initial_state {} out of range", mdp.initial_state));
    if (mdp.rewards.rows() != idx(mdp.n_states) || mdp.rewards.cols() != idx(mdp.n_actions)) {
        out.emplace_back("rewards shape does not match n_states x n_actions");
    } else {
        for (std::size_t x = 0; x < mdp.n_states; ++x)
            for (std::size_t a = 0; a < mdp.n_actions; ++a)
                if (!(std::abs(mdp.reward(x, a)) <= mdp.r_max))
                    out.push_back(fmt::format("|reward({},{})| = {} exceeds r_max {}", x, a,
                                              std::abs(mdp.reward(x, a)), mdp.r_max));
    }
    if (mdp.transitions.size() != mdp.n_actions) {
        out.emplace_back("transitions must hold one matrix per action");
        return out;
    }
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
        const auto& t = mdp.transitions[a];
        if (t.rows() != idx(mdp.n_states) || t.cols() != idx(mdp.n_states)) {
            out.push_back(fmt::format("transition matrix for action {} has wrong shape", a));
            continue;
        }
        for (std::size_t x = 0; x < mdp.n_states; ++x) {
            const auto row = t.row(idx(x));
            if (row.minCoeff() < 0.0)
                out.push_back(fmt::format("row ({},{}) has a negative entry", x, a));
            const double sum = row.sum();
            if (!(std::abs(sum - 1.0) <= kStochasticTol))
                out.push_back(fmt::format("row ({},{}) sums to {}", x, a, sum));
        }
    }
    if (mdp.initial_distribution) {
        const auto& p0 = *mdp.initial_distribution;
        if (p0.size() != idx(mdp.n_states))
            out.emplace_back("initial_distribution has wrong length");
        else if (p0.minCoeff() < 0.0 || std::abs(p0.sum() - 1.0) > kStochasticTol)
            out.emplace_back("initial_distribution is not a probability vector");
    }
    return out;
}

Eigen::MatrixXd policy_transition_matrix(const TabularMdp& mdp, const PolicyTable& policy) {
    require_compatible(mdp, policy);
    const auto n = idx(mdp.n_states);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t x = 0; x < mdp.n_states; ++x)
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            const double w = policy.probability(x, a);
            if (w != 0.0) p.row(idx(x)) += w * mdp.transitions[a].row(idx(x));
        }
    return p;
}

Eigen::VectorXd policy_reward_vector(const TabularMdp& mdp, const PolicyTable& policy,
                                     const Eigen::MatrixXd& stage_reward) {
    require_compatible(mdp, policy);
    if (stage_reward.rows() != idx(mdp.n_states) || stage_reward.cols() != idx(mdp.n_actions))
        throw std::invalid_argument("stage reward shape does not match the MDP");
    Eigen::VectorXd r(idx(mdp.n_states));
    for (std::size_t x = 0; x < mdp.n_states; ++x) {
        double acc = 0.0;
        for (std::size_t a = 0; a < mdp.n_actions; ++a)
            acc += policy.probability(x, a) * stage_reward(idx(x), idx(a));
        r(idx(x)) = acc;
    }
    return r;
}

Eigen::VectorXd solve_discounted(const Eigen::MatrixXd& transition, const Eigen::VectorXd& reward,
                                 double gamma) {
    const auto n = transition.rows();
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - gamma * transition;
    Eigen::VectorXd v = system.partialPivLu().solve(reward);
    if (!v.allFinite()) throw std::runtime_error("policy evaluation produced non-finite values");
    return v;
}

Eigen::VectorXd policy_values(const TabularMdp& mdp, const PolicyTable& policy,
                              const Eigen::MatrixXd& stage_reward) {
    return solve_discounted(policy_transition_matrix(mdp, policy),
                            policy_reward_vector(mdp, policy, stage_reward), mdp.gamma);
}

Eigen::VectorXd policy_values(const TabularMdp& mdp, const PolicyTable& policy) {
    return policy_values(mdp, policy, mdp.rewards);
}

double policy_return(const TabularMdp& mdp, const PolicyTable& policy,
                     const Eigen::MatrixXd& stage_reward) {
    return mdp.start_distribution().dot(policy_values(mdp, policy, stage_reward));
}

double policy_return(const TabularMdp& mdp, const PolicyTable& policy) {
    return policy_return(mdp, policy, mdp.rewards);
}

OccupationMeasure occupation_measure(const TabularMdp& mdp, const PolicyTable& policy) {
    const Eigen::MatrixXd p = policy_transition_matrix(mdp, policy);
    const auto n = p.rows();
    const Eigen::MatrixXd system =
        (Eigen::MatrixXd::Identity(n, n) - mdp.gamma * p).transpose();
    OccupationMeasure occ;
    occ.state = system.partialPivLu().solve((1.0 - mdp.gamma) * mdp.start_distribution());
    occ.state_action = occ.state.asDiagonal() * policy.probabilities();
    return occ;
}

double baseline_threshold(const TabularMdp& true_mdp, const PolicyTable& baseline) {
    return policy_return(true_mdp, baseline);
}

PlainSolution solve_optimal(const TabularMdp& mdp, const Eigen::MatrixXd& stage_reward) {
    std::vector<std::size_t> acts(mdp.n_states, 0);
    PolicyTable policy = PolicyTable::deterministic(acts, mdp.n_actions);
    Eigen::VectorXd v = policy_values(mdp, policy, stage_reward);
    constexpr double tie = 1e-12;
    // Policy iteration with incumbent-sticky ties; terminates because values
    // strictly increase on every change.
    for (std::size_t iter = 0; iter < 100000; ++iter) {
        bool changed = false;
        for (std::size_t x = 0; x < mdp.n_states; ++x) {
            auto q = [&](std::size_t a) {
                return stage_reward(idx(x), idx(a)) +
                       mdp.gamma * mdp.transitions[a].row(idx(x)).dot(v);
            };
            std::size_t best = acts[x];
            double best_q = q(best);
            for (std::size_t a = 0; a < mdp.n_actions; ++a) {
                const double qa = q(a);
                if (qa > best_q + tie * std::max(1.0, std::abs(best_q))) {
                    best = a;
                    best_q = qa;
                }
            }
            if (best != acts[x]) {
                acts[x] = best;
                changed = true;
            }
        }
        policy = PolicyTable::deterministic(acts, mdp.n_actions);
        if (!changed) break;
        v = policy_values(mdp, policy, stage_reward);
    }
    return {std::move(v), std::move(policy)};
}

PlainSolution solve_optimal(const TabularMdp& mdp) { return solve_optimal(mdp, mdp.rewards); }

TabularMdp permute_states(const TabularMdp& mdp, const std::vector<std::size_t>& perm) {
    if (perm.size() != mdp.n_states) throw std::invalid_argument("permutation has wrong length");
    std::vector<std::size_t> inverse(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) inverse[perm[k]] = k;
    TabularMdp out = mdp;
    for (std::size_t k = 0; k < mdp.n_states; ++k) {
        out.rewards.row(idx(k)) = mdp.rewards.row(idx(perm[k]));
        for (std::size_t a = 0; a < mdp.n_actions; ++a)
            for (std::size_t j = 0; j < mdp.n_states; ++j)
                out.transitions[a](idx(k), idx(j)) = mdp.transitions[a](idx(perm[k]), idx(perm[j]));
    }
    out.initial_state = inverse[mdp.initial_state];
    if (mdp.initial_distribution) {
        Eigen::VectorXd p0(idx(mdp.n_states));
        for (std::size_t k = 0; k < mdp.n_states; ++k) p0(idx(k)) = (*mdp.initial_distribution)(idx(perm[k]));
        out.initial_distribution = p0;
    }
    return out;
}

}  // namespace safepi
