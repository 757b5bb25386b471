#include "safepi/oracle.hpp"
#include "safepi/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace safepi {

namespace {

constexpr double kFeasibleSlack = 1e-9;
constexpr int kGoldenIters = 90;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

Eigen::MatrixXd penalized_stage_reward(const TabularMdp& sim, const ErrorBound& error) {
    return sim.rewards - (sim.gamma * sim.r_max / (1.0 - sim.gamma)) * error.e;
}

// Rows of the flow constraint sum_a pi(y,a) - gamma sum_{x,a} P(y|x,a) pi(x,a) = rhs(y),
// written into columns offset + x * m + a.
void add_flow_block(Eigen::MatrixXd& a_eq, Eigen::Index row0, Eigen::Index offset,
                    const TabularMdp& model) {
    const auto n = idx(model.n_states);
    const auto m = idx(model.n_actions);
    for (Eigen::Index x = 0; x < n; ++x)
        for (Eigen::Index a = 0; a < m; ++a) {
            const Eigen::Index col = offset + x * m + a;
            a_eq(row0 + x, col) += 1.0;
            for (Eigen::Index y = 0; y < n; ++y)
                a_eq(row0 + y, col) -= model.gamma * model.transitions[static_cast<std::size_t>(a)](x, y);
        }
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& table) {
    Eigen::VectorXd out(table.size());
    for (Eigen::Index x = 0; x < table.rows(); ++x)
        for (Eigen::Index a = 0; a < table.cols(); ++a) out(x * table.cols() + a) = table(x, a);
    return out;
}

void fill_random_rows(TabularMdp& mdp, std::mt19937_64& rng) {
    for (std::size_t x = 0; x < mdp.n_states; ++x)
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            auto row = mdp.transitions[a].row(idx(x));
            for (std::size_t y = 0; y < mdp.n_states; ++y)
                row(idx(y)) = -std::log1p(-unit_uniform(rng));
            row /= row.sum();
        }
}

}  // namespace

PolicyEnumerator::PolicyEnumerator(std::size_t n_states, std::size_t n_actions, bool augmented)
    : n_rows_(augmented ? 2 * n_states : n_states),
      n_actions_(n_actions),
      space_(augmented ? StateSpace::augmented : StateSpace::plain),
      digits_(n_rows_, 0) {
    if (n_states == 0 || n_actions == 0)
        throw std::invalid_argument("enumeration needs at least one state and one action");
    const double total = std::pow(static_cast<double>(n_actions), static_cast<double>(n_rows_));
    if (total > kEnumerationGuard)
        throw std::length_error(
            fmt::format("{}^{} policies exceed the enumeration guard", n_actions, n_rows_));
    count_ = static_cast<std::size_t>(std::llround(total));
}

bool PolicyEnumerator::next(PolicyTable& out) {
    if (done_) return false;
    if (started_) {
        std::size_t k = n_rows_;
        while (k > 0) {
            --k;
            if (++digits_[k] < n_actions_) break;
            digits_[k] = 0;
            if (k == 0) {
                done_ = true;
                return false;
            }
        }
    }
    started_ = true;
    out = PolicyTable::deterministic(digits_, n_actions_, space_);
    return true;
}

std::vector<PolicyTable> enumerate_policies(std::size_t n_states, std::size_t n_actions,
                                            bool augmented) {
    PolicyEnumerator it(n_states, n_actions, augmented);
    std::vector<PolicyTable> out;
    out.reserve(it.count());
    PolicyTable p;
    while (it.next(p)) out.push_back(p);
    return out;
}

std::pair<double, double> minimize_upper_envelope(const std::vector<DualLine>& lines,
                                                  double lambda_max) {
    if (lines.empty()) throw std::invalid_argument("no dual lines");
    const auto value_at = [&](double lambda) {
        if (std::isinf(lambda)) return -std::numeric_limits<double>::infinity();
        double v = -std::numeric_limits<double>::infinity();
        for (const auto& l : lines) v = std::max(v, l.intercept + lambda * l.slope);
        return v;
    };

    std::size_t cur = 0;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& c = lines[cur];
        const auto& l = lines[k];
        if (l.intercept > c.intercept || (l.intercept == c.intercept && l.slope > c.slope))
            cur = k;
    }
    double lambda = 0.0;
    for (;;) {
        if (lines[cur].slope >= 0.0) return {lambda, value_at(lambda)};
        std::size_t next = lines.size();
        double t_next = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < lines.size(); ++k) {
            if (lines[k].slope <= lines[cur].slope) continue;
            double t = (lines[cur].intercept - lines[k].intercept) /
                       (lines[k].slope - lines[cur].slope);
            t = std::max(t, lambda);
            if (t < t_next || (t == t_next && lines[k].slope > lines[next].slope)) {
                t_next = t;
                next = k;
            }
        }
        if (next == lines.size() || t_next >= lambda_max) return {lambda_max, value_at(lambda_max)};
        lambda = t_next;
        cur = next;
    }
}

OracleResult exact_constrained_optimum(const TabularMdp& true_mdp, const TabularMdp& sim,
                                       double m_b) {
    if (true_mdp.n_states != sim.n_states || true_mdp.n_actions != sim.n_actions)
        throw std::invalid_argument("models differ in dimensions");
    PolicyEnumerator it(sim.n_states, sim.n_actions, false);
    OracleResult out;
    out.enumerated_count = it.count();

    std::vector<DualLine> lines;
    lines.reserve(it.count());
    PolicyTable p;
    while (it.next(p)) {
        const double objective = policy_return(sim, p);
        const double constraint = policy_return(true_mdp, p);
        lines.push_back({objective, constraint - m_b});
        if (constraint >= m_b - kFeasibleSlack && (!out.feasible || objective > out.primal_value)) {
            out.feasible = true;
            out.primal_value = objective;
            out.best_policy = p;
        }
    }
    const auto [lambda_star, dual] =
        minimize_upper_envelope(lines, std::numeric_limits<double>::infinity());
    out.lambda_star = lambda_star;
    out.dual_value = dual;
    out.duality_gap = out.feasible ? std::abs(out.primal_value - out.dual_value)
                                   : std::numeric_limits<double>::infinity();
    out.lp_relaxation_value = augmented_lp_primal(true_mdp, sim, m_b);
    return out;
}

std::pair<double, double> exact_surrogate_dual(const TabularMdp& sim, const ErrorBound& error,
                                               double m_b, double lambda_max) {
    const Eigen::MatrixXd penalized = penalized_stage_reward(sim, error);
    PolicyEnumerator it(sim.n_states, sim.n_actions, false);
    std::vector<DualLine> lines;
    lines.reserve(it.count());
    PolicyTable p;
    while (it.next(p))
        lines.push_back({policy_return(sim, p), policy_return(sim, p, penalized) - m_b});
    return minimize_upper_envelope(lines, lambda_max);
}

std::vector<double> lambda_grid(double upper, double step) {
    if (!(upper >= 0.0) || !(step > 0.0)) throw std::invalid_argument("bad lambda grid");
    std::vector<double> grid;
    for (std::size_t k = 0;; ++k) {
        const double v = static_cast<double>(k) * step;
        if (v >= upper - 1e-12 * std::max(1.0, upper)) break;
        grid.push_back(v);
    }
    grid.push_back(upper);
    return grid;
}

std::pair<double, double> dual_grid_search(const TabularMdp& sim, const ErrorBound& error,
                                           double m_b, const std::vector<double>& grid,
                                           const SaddleConfig& cfg, bool refine) {
    if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw std::invalid_argument("lambda grid must be sorted");

    PolicyTable warm = PolicyTable::deterministic(std::vector<std::size_t>(2 * sim.n_states, 0),
                                                  sim.n_actions, StateSpace::augmented);
    const auto f = [&](double lambda) {
        DualEvaluation ev = dual_value_and_subgradient(sim, error, lambda, m_b, cfg, &warm);
        warm = ev.policy;
        return ev.f;
    };

    std::size_t k_best = 0;
    double f_best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double v = f(grid[k]);
        if (v < f_best) {
            f_best = v;
            k_best = k;
        }
    }
    double lambda_best = grid[k_best];
    if (!refine || grid.size() == 1) return {lambda_best, f_best};

    double lo = grid[k_best == 0 ? 0 : k_best - 1];
    double hi = grid[std::min(k_best + 1, grid.size() - 1)];
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - phi * (hi - lo);
    double d = lo + phi * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < kGoldenIters && hi - lo > 1e-14; ++it) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
        if (fc < f_best) f_best = fc, lambda_best = c;
        if (fd < f_best) f_best = fd, lambda_best = d;
    }
    return {lambda_best, f_best};
}

std::optional<double> augmented_lp_primal(const TabularMdp& true_mdp, const TabularMdp& sim,
                                          double m_b) {
    const auto n = idx(sim.n_states);
    const auto m = idx(sim.n_actions);
    const Eigen::Index block = n * m;
    const Eigen::VectorXd p0 = sim.start_distribution();
    const double scale = 2.0 / (1.0 - sim.gamma);

    Eigen::MatrixXd a_eq = Eigen::MatrixXd::Zero(2 * n, 2 * block);
    add_flow_block(a_eq, 0, 0, sim);
    add_flow_block(a_eq, n, block, true_mdp);
    Eigen::VectorXd b_eq(2 * n);
    b_eq << 0.5 * (1.0 - sim.gamma) * p0, 0.5 * (1.0 - sim.gamma) * p0;

    const Eigen::VectorXd r = flatten(sim.rewards);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * block);
    c.head(block) = scale * r;
    Eigen::MatrixXd a_ub = Eigen::MatrixXd::Zero(1, 2 * block);
    a_ub.row(0).tail(block) = -scale * r.transpose();
    Eigen::VectorXd b_ub(1);
    b_ub << -m_b;

    const LpResult res = solve_lp(c, a_eq, b_eq, a_ub, b_ub);
    if (res.status != LpStatus::optimal) return std::nullopt;
    return res.objective;
}

std::optional<double> surrogate_lp_primal(const TabularMdp& sim, const ErrorBound& error,
                                          double m_b) {
    const auto n = idx(sim.n_states);
    const auto m = idx(sim.n_actions);
    const double scale = 1.0 / (1.0 - sim.gamma);

    Eigen::MatrixXd a_eq = Eigen::MatrixXd::Zero(n, n * m);
    add_flow_block(a_eq, 0, 0, sim);
    const Eigen::VectorXd b_eq = (1.0 - sim.gamma) * sim.start_distribution();

    const Eigen::VectorXd c = scale * flatten(sim.rewards);
    Eigen::MatrixXd a_ub(1, n * m);
    a_ub.row(0) = -scale * flatten(penalized_stage_reward(sim, error)).transpose();
    Eigen::VectorXd b_ub(1);
    b_ub << -m_b;

    const LpResult res = solve_lp(c, a_eq, b_eq, a_ub, b_ub);
    if (res.status != LpStatus::optimal) return std::nullopt;
    return res.objective;
}

DualityCheck strong_duality_gap(const TabularMdp& true_mdp, const TabularMdp& sim, double m_b,
                                const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
    DualityCheck out;
    const auto primal = augmented_lp_primal(true_mdp, sim, m_b);
    out.primal_feasible = primal.has_value();

    SaddleConfig cfg;
    cfg.track_coupling = TrackCoupling::independent;
    const ErrorBound none = ErrorBound::zeros(sim.n_states, sim.n_actions);
    PolicyTable warm = PolicyTable::deterministic(std::vector<std::size_t>(2 * sim.n_states, 0),
                                                  sim.n_actions, StateSpace::augmented);
    out.dual = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        const AugmentedMdp aug =
            AugmentedMdp::mixed(sim, true_mdp, none, lambda, RewardMode::plain);
        InnerResult inner = inner_policy_iteration(aug, warm, cfg);
        const double v = aug.start_distribution().dot(inner.values.values) - lambda * m_b;
        warm = std::move(inner.policy);
        if (v < out.dual) {
            out.dual = v;
            out.lambda_star = lambda;
        }
    }
    out.primal = primal.value_or(-std::numeric_limits<double>::infinity());
    out.gap = std::abs(out.dual - out.primal);
    return out;
}

DualityCheck surrogate_duality_gap(const TabularMdp& sim, const ErrorBound& error, double m_b,
                                   const std::vector<double>& grid, const SaddleConfig& cfg) {
    DualityCheck out;
    const auto primal = surrogate_lp_primal(sim, error, m_b);
    out.primal_feasible = primal.has_value();
    const auto [lambda_star, dual] = dual_grid_search(sim, error, m_b, grid, cfg, true);
    out.lambda_star = lambda_star;
    out.dual = dual;
    out.primal = primal.value_or(-std::numeric_limits<double>::infinity());
    out.gap = std::abs(out.dual - out.primal);
    return out;
}

TabularMdp random_mdp(std::size_t n_states, std::size_t n_actions, double gamma,
                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TabularMdp mdp = make_empty_mdp(n_states, n_actions, gamma, 1.0, 0);
    for (Eigen::Index x = 0; x < mdp.rewards.rows(); ++x)
        for (Eigen::Index a = 0; a < mdp.rewards.cols(); ++a)
            mdp.rewards(x, a) = 2.0 * unit_uniform(rng) - 1.0;
    fill_random_rows(mdp, rng);
    return mdp;
}

Instance random_instance(const InstanceSpec& spec, std::uint64_t seed) {
    if (!(spec.perturbation >= 0.0 && spec.perturbation <= 1.0))
        throw std::invalid_argument("perturbation must lie in [0,1]");
    if (!(spec.margin >= 1.0)) throw std::invalid_argument("margin below 1 gives an invalid bound");
    Instance inst;
    inst.true_mdp = random_mdp(spec.n_states, spec.n_actions, spec.gamma, seed);

    TabularMdp noise = make_empty_mdp(spec.n_states, spec.n_actions, spec.gamma);
    std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
    fill_random_rows(noise, rng);
    inst.sim_mdp = inst.true_mdp;
    for (std::size_t a = 0; a < spec.n_actions; ++a) {
        inst.sim_mdp.transitions[a] = (1.0 - spec.perturbation) * inst.true_mdp.transitions[a] +
                                      spec.perturbation * noise.transitions[a];
        for (Eigen::Index x = 0; x < inst.sim_mdp.transitions[a].rows(); ++x)
            inst.sim_mdp.transitions[a].row(x) /= inst.sim_mdp.transitions[a].row(x).sum();
    }

    inst.error = true_mismeasure(inst.true_mdp, inst.sim_mdp);
    inst.error.e = (spec.margin * inst.error.e).cwiseMin(2.0);
    if (!(spec.baseline_quality >= 0.0 && spec.baseline_quality <= 1.0))
        throw std::invalid_argument("baseline_quality must lie in [0,1]");
    const PolicyTable optimal = solve_optimal(inst.true_mdp).policy;
    inst.baseline = PolicyTable::stochastic(
        (1.0 - spec.baseline_quality) * PolicyTable::uniform(spec.n_states, spec.n_actions).probabilities() +
        spec.baseline_quality * optimal.probabilities());
    inst.m_b = baseline_threshold(inst.true_mdp, inst.baseline);
    return inst;
}

bool strictly_feasible(const Instance& inst, double slack) {
    const Eigen::MatrixXd penalized = penalized_stage_reward(inst.sim_mdp, inst.error);
    const PlainSolution best = solve_optimal(inst.sim_mdp, penalized);
    return policy_return(inst.sim_mdp, best.policy, penalized) > inst.m_b + slack;
}

}  // namespace safepi
