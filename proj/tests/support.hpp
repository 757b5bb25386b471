#pragma once

#include "safepi/oracle.hpp"

#include <cmath>
#include <random>
#include <utility>

namespace safepi::testing {

// Augmented model rebuilt from the base models with explicit loops, sharing
// no code with AugmentedMdp. Track 1 follows `track1` (the simulated or the true model).
struct LoopAugmented {
    TabularMdp sim;
    TabularMdp track1;
    Eigen::MatrixXd e;
    double lambda = 0.0;
    bool penalized = false;

    std::size_t n() const { return sim.n_states; }
    std::size_t m() const { return sim.n_actions; }

    double reward(std::size_t x, int i, std::size_t a) const {
        if (i == 0) return 2.0 * sim.rewards(x, a);
        double r = 2.0 * lambda * sim.rewards(x, a);
        if (penalized) r -= 2.0 * lambda * sim.gamma * sim.r_max / (1.0 - sim.gamma) * e(x, a);
        return r;
    }

    double q(const Eigen::VectorXd& v, std::size_t x, int i, std::size_t a) const {
        const TabularMdp& model = i == 0 ? sim : track1;
        double next = 0.0;
        for (std::size_t y = 0; y < n(); ++y)
            next += model.transitions[a](x, y) * v(y + i * n());
        return reward(x, i, a) + sim.gamma * next;
    }

    Eigen::VectorXd apply_optimal(const Eigen::VectorXd& v) const {
        Eigen::VectorXd out(2 * n());
        for (int i = 0; i < 2; ++i)
            for (std::size_t x = 0; x < n(); ++x) {
                double best = -INFINITY;
                for (std::size_t a = 0; a < m(); ++a) best = std::max(best, q(v, x, i, a));
                out(x + i * n()) = best;
            }
        return out;
    }

    Eigen::VectorXd apply_policy(const Eigen::MatrixXd& probs, const Eigen::VectorXd& v) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * n());
        for (int i = 0; i < 2; ++i)
            for (std::size_t x = 0; x < n(); ++x)
                for (std::size_t a = 0; a < m(); ++a)
                    out(x + i * n()) += probs(x + i * n(), a) * q(v, x, i, a);
        return out;
    }

    // Fixed point of T^mu by repeated application.
    Eigen::VectorXd iterate_policy(const Eigen::MatrixXd& probs) const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * n());
        for (int k = 0; k < 100000; ++k) {
            Eigen::VectorXd next = apply_policy(probs, v);
            const double delta = (next - v).cwiseAbs().maxCoeff();
            v = std::move(next);
            if (delta < 1e-14) break;
        }
        return v;
    }

    double start_value(const Eigen::VectorXd& v) const {
        const Eigen::VectorXd p0 = sim.start_distribution();
        double total = 0.0;
        for (std::size_t x = 0; x < n(); ++x) total += 0.5 * p0(x) * (v(x) + v(x + n()));
        return total;
    }
};

inline LoopAugmented loop_augmented(const TabularMdp& sim, const TabularMdp& track1,
                                    const ErrorBound& error, double lambda, bool penalized) {
    return {sim, track1, error.e, lambda, penalized};
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// Truncated rollouts of a plain policy; rewards accumulate as sum gamma^k r(x_k, a_k).
inline MonteCarloEstimate monte_carlo_return(const TabularMdp& mdp, const PolicyTable& policy,
                                             std::size_t episodes, std::size_t horizon,
                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Eigen::MatrixXd probs = policy.probabilities();
    const Eigen::VectorXd p0 = mdp.start_distribution();
    auto draw = [&](auto&& weight, std::size_t count) {
        double u = unit(rng);
        for (std::size_t k = 0; k + 1 < count; ++k) {
            u -= weight(k);
            if (u < 0.0) return k;
        }
        return count - 1;
    };
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        std::size_t x = draw([&](std::size_t k) { return p0(k); }, mdp.n_states);
        double discount = 1.0;
        double total = 0.0;
        for (std::size_t t = 0; t < horizon; ++t) {
            const std::size_t a = draw([&](std::size_t k) { return probs(x, k); }, mdp.n_actions);
            total += discount * mdp.rewards(x, a);
            discount *= mdp.gamma;
            x = draw([&](std::size_t k) { return mdp.transitions[a](x, k); }, mdp.n_states);
        }
        sum += total;
        sum_sq += total * total;
    }
    const double n = static_cast<double>(episodes);
    const double mean = sum / n;
    const double var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

// Two states; every action moves to the other state.
inline TabularMdp swap_mdp(double gamma) {
    TabularMdp mdp = make_empty_mdp(2, 2, gamma);
    for (std::size_t a = 0; a < 2; ++a) mdp.transitions[a] << 0.0, 1.0, 1.0, 0.0;
    mdp.rewards << 1.0, 0.0, 0.0, 1.0;
    return mdp;
}

inline Eigen::VectorXd random_vector(std::size_t n, double scale, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = u(rng);
    return v;
}

// Random stochastic policy over `rows` states.
inline PolicyTable random_stochastic_policy(std::size_t rows, std::size_t n_actions,
                                            StateSpace space, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd p(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n_actions));
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        for (Eigen::Index a = 0; a < p.cols(); ++a) p(r, a) = u(rng);
        p.row(r) /= p.row(r).sum();
    }
    return PolicyTable::stochastic(p, space);
}

// Places m_b a fraction t of the way from the penalized return of the unconstrained
// simulated optimum to the best achievable penalized return.
inline double interpolated_threshold(const TabularMdp& sim, const ErrorBound& error, double t) {
    const Eigen::MatrixXd pen =
        sim.rewards - (sim.gamma * sim.r_max / (1.0 - sim.gamma)) * error.e;
    const double lo = policy_return(sim, solve_optimal(sim).policy, pen);
    const double hi = policy_return(sim, solve_optimal(sim, pen).policy, pen);
    return lo + t * (hi - lo);
}

}  // namespace safepi::testing
