#include "safepi/saddle.hpp"

#include <optional>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace safepi {

namespace {

constexpr double kFeasibleSlack = 1e-9;
constexpr double kKinkTol = 1e-13;
constexpr std::size_t kMaxInnerSweeps = 100'000;

Eigen::MatrixXd penalized_stage_reward(const TabularMdp& sim, const ErrorBound& error) {
    return sim.rewards - (sim.gamma * sim.r_max / (1.0 - sim.gamma)) * error.e;
}

}  // namespace

double SaddleConfig::resolved_lambda_max(const TabularMdp& sim) const {
    return lambda_max ? *lambda_max : 4.0 * sim.r_max / (1.0 - sim.gamma);
}

double SaddleConfig::resolved_step_alpha0(const TabularMdp& sim) const {
    return step_alpha0 ? *step_alpha0 : (1.0 - sim.gamma) / sim.r_max;
}

void SaddleConfig::validate() const {
    if (!(lambda0 >= 0.0)) throw std::invalid_argument("lambda0 must be nonnegative");
    if (lambda_max && !(*lambda_max > 0.0))
        throw std::invalid_argument("lambda_max must be positive");
    if (lambda_max && lambda0 > *lambda_max)
        throw std::invalid_argument("lambda0 exceeds lambda_max");
    if (step_alpha0 && !(*step_alpha0 > 0.0))
        throw std::invalid_argument("step_alpha0 must be positive");
    if (!(outer_tol > 0.0)) throw std::invalid_argument("outer_tol must be positive");
    if (outer_patience == 0) throw std::invalid_argument("outer_patience must be positive");
    if (max_outer_iters == 0) throw std::invalid_argument("max_outer_iters must be positive");
    bellman.validate();
}

InnerResult inner_policy_iteration(const AugmentedMdp& aug, const PolicyTable& initial_policy,
                                   const SaddleConfig& cfg) {
    if (initial_policy.kind() != PolicyKind::deterministic)
        throw std::invalid_argument("inner policy iteration needs a deterministic initial policy");
    InnerResult out{initial_policy, evaluate_policy_aug(aug, initial_policy), 0};
    while (out.iterations < kMaxInnerSweeps) {
        ++out.iterations;
        PolicyTable next =
            greedy_improve(aug, out.values, out.policy, cfg.bellman, cfg.track_coupling);
        if (next == out.policy) return out;
        out.policy = std::move(next);
        out.values = evaluate_policy_aug(aug, out.policy);
    }
    throw std::runtime_error("policy iteration cycled; tie tolerance too small for this model");
}

double penalized_return(const TabularMdp& sim, const ErrorBound& error, const PolicyTable& plain) {
    return policy_return(sim, plain, penalized_stage_reward(sim, error));
}

DualEvaluation dual_value_and_subgradient(const TabularMdp& sim, const ErrorBound& error,
                                          double lambda, double m_b, const SaddleConfig& cfg,
                                          const PolicyTable* warm_start) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
    const AugmentedMdp aug = AugmentedMdp::simulated(sim, error, lambda, RewardMode::penalized);
    const PolicyTable start =
        warm_start ? *warm_start
                   : PolicyTable::deterministic(std::vector<std::size_t>(aug.n_states(), 0),
                                                aug.n_actions(), StateSpace::augmented);
    InnerResult inner = inner_policy_iteration(aug, start, cfg);

    DualEvaluation out;
    out.lambda = lambda;
    out.f = aug.start_distribution().dot(inner.values.values) - lambda * m_b;
    out.g = penalized_return(sim, error, inner.policy.restrict_track(1)) - m_b;
    out.policy = std::move(inner.policy);
    out.inner_iterations = inner.iterations;
    return out;
}

namespace {

// f is piecewise linear and convex in lambda. From `start`, bracket the kink where the
// subgradient changes sign, then walk it down by intersecting the supporting lines at
// both ends. Returns the point just on the feasible side.
DualEvaluation refine_at_kink(const TabularMdp& sim, const ErrorBound& error, double m_b,
                              const SaddleConfig& cfg, double lambda_max, DualEvaluation start) {
    const bool go_right = start.g < -kFeasibleSlack;
    if (go_right ? start.lambda >= lambda_max : (start.g <= kFeasibleSlack || start.lambda <= 0.0))
        return start;

    std::optional<DualEvaluation> lo;
    std::optional<DualEvaluation> hi;
    (go_right ? lo : hi) = start;
    for (double delta = cfg.outer_tol;; delta *= 2.0) {
        const DualEvaluation& from = go_right ? *lo : *hi;
        const double probe = go_right ? std::min(lambda_max, from.lambda + delta)
                                      : std::max(0.0, from.lambda - delta);
        DualEvaluation side = dual_value_and_subgradient(sim, error, probe, m_b, cfg, &from.policy);
        const bool feasible_side = side.g >= -kFeasibleSlack;
        if (go_right == feasible_side) {
            (go_right ? hi : lo) = std::move(side);
            break;
        }
        (go_right ? lo : hi) = std::move(side);
        if (probe >= lambda_max || probe <= 0.0) break;
    }
    if (!lo || !hi) return go_right ? *lo : *hi;

    for (int k = 0; k < 200 && hi->lambda - lo->lambda > kKinkTol; ++k) {
        const double cross =
            (hi->f - lo->f + lo->g * lo->lambda - hi->g * hi->lambda) / (lo->g - hi->g);
        if (!(cross > lo->lambda && cross < hi->lambda)) break;
        DualEvaluation mid = dual_value_and_subgradient(sim, error, cross, m_b, cfg, &hi->policy);
        if (mid.g >= -kFeasibleSlack) {
            const bool stalled = hi->lambda - cross <= kKinkTol;
            hi = std::move(mid);
            if (stalled) break;
        } else {
            if (cross - lo->lambda <= kKinkTol) break;
            lo = std::move(mid);
        }
    }
    return std::move(*hi);
}

}  // namespace

SaddleSolution solve_saddle(const TabularMdp& sim, const ErrorBound& error, double m_b,
                            const SaddleConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(m_b)) throw std::invalid_argument("m_b must be finite");
    const double lambda_max = cfg.resolved_lambda_max(sim);
    const double alpha0 = cfg.resolved_step_alpha0(sim);
    if (cfg.lambda0 > lambda_max) throw std::invalid_argument("lambda0 exceeds lambda_max");

    SaddleSolution sol;
    sol.m_b = m_b;
    sol.lambda_max = lambda_max;

    DualEvaluation current = dual_value_and_subgradient(sim, error, cfg.lambda0, m_b, cfg);
    DualEvaluation best = current;
    double f_min = current.f;
    sol.lambda_trace.push_back(current.lambda);
    sol.f_min_trace.push_back(f_min);
    sol.subgradient_trace.push_back(current.g);
    sol.inner_iterations.push_back(current.inner_iterations);

    std::size_t streak = 0;
    for (std::size_t j = 0; j < cfg.max_outer_iters; ++j) {
        const double alpha = alpha0 / static_cast<double>(j + 1);
        const double proposal = std::clamp(current.lambda - alpha * current.g, 0.0, lambda_max);
        const double step = std::abs(proposal - current.lambda);

        DualEvaluation candidate =
            proposal == current.lambda
                ? current
                : dual_value_and_subgradient(sim, error, proposal, m_b, cfg, &current.policy);
        if (candidate.f <= f_min) {
            f_min = candidate.f;
            best = candidate;
            current = std::move(candidate);
        } else if (!cfg.literal_best_lambda) {
            current = std::move(candidate);
        }

        sol.lambda_trace.push_back(current.lambda);
        sol.f_min_trace.push_back(f_min);
        sol.subgradient_trace.push_back(current.g);
        sol.inner_iterations.push_back(current.inner_iterations);
        sol.outer_iterations = j + 1;

        streak = step <= cfg.outer_tol ? streak + 1 : 0;
        if (streak >= cfg.outer_patience) {
            sol.converged = true;
            break;
        }
    }

    if (cfg.feasible_side_extraction) best = refine_at_kink(sim, error, m_b, cfg, lambda_max, best);

    sol.policy_hat = best.policy;
    sol.lambda_hat = best.lambda;
    sol.dual_value = best.f;
    sol.feasible = best.g >= -kFeasibleSlack;
    return sol;
}

}  // namespace safepi
