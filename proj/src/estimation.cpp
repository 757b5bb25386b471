#include "safepi/estimation.hpp"
#include "safepi/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace safepi {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

template <typename Row>
std::size_t sample_index(const Row& probs, std::mt19937_64& rng) {
    const double u = unit_uniform(rng);
    double acc = 0.0;
    const auto n = static_cast<std::size_t>(probs.size());
    for (std::size_t k = 0; k < n; ++k) {
        acc += probs(idx(k));
        if (u < acc) return k;
    }
    // Rounding left u above the accumulated mass: take the last supported entry.
    for (std::size_t k = n; k-- > 0;)
        if (probs(idx(k)) > 0.0) return k;
    return n - 1;
}

}  // namespace

TrajectoryBatch TrajectoryBatch::from_triples(std::vector<Transition> triples,
                                              std::size_t n_states, std::size_t n_actions) {
    TrajectoryBatch batch;
    batch.counts = Eigen::MatrixXd::Zero(idx(n_states), idx(n_actions));
    for (const auto& t : triples) {
        if (t.x >= n_states || t.y >= n_states || t.a >= n_actions)
            throw std::out_of_range(
                fmt::format("transition ({}, {}, {}) out of range", t.x, t.a, t.y));
        batch.counts(idx(t.x), idx(t.a)) += 1.0;
    }
    batch.transitions_observed = std::move(triples);
    return batch;
}

ErrorBound ErrorBound::zeros(std::size_t n_states, std::size_t n_actions) {
    return {Eigen::MatrixXd::Zero(idx(n_states), idx(n_actions))};
}

std::vector<std::string> ErrorBound::validate() const {
    std::vector<std::string> out;
    for (Eigen::Index x = 0; x < e.rows(); ++x)
        for (Eigen::Index a = 0; a < e.cols(); ++a)
            if (!(e(x, a) >= 0.0 && e(x, a) <= 2.0))
                out.push_back(fmt::format("e({},{}) = {} outside [0,2]", x, a, e(x, a)));
    return out;
}

TrajectoryBatch simulate_trajectories(const TabularMdp& true_mdp, const PolicyTable& baseline,
                                      std::size_t n_steps, std::size_t episode_length,
                                      std::uint64_t seed) {
    if (n_steps == 0 || episode_length == 0)
        throw std::invalid_argument("n_steps and episode_length must be positive");
    if (baseline.state_space() != StateSpace::plain || baseline.n_rows() != true_mdp.n_states ||
        baseline.n_actions() != true_mdp.n_actions)
        throw std::invalid_argument("baseline policy does not match the model");

    std::mt19937_64 rng(seed);
    const Eigen::VectorXd p0 = true_mdp.start_distribution();
    const Eigen::MatrixXd policy = baseline.probabilities();

    std::vector<Transition> triples;
    triples.reserve(n_steps);
    std::size_t x = sample_index(p0, rng);
    for (std::size_t step = 0; step < n_steps; ++step) {
        if (step > 0 && step % episode_length == 0) x = sample_index(p0, rng);
        const std::size_t a = sample_index(policy.row(idx(x)), rng);
        const std::size_t y = sample_index(true_mdp.transitions[a].row(idx(x)), rng);
        triples.push_back({x, a, y});
        x = y;
    }
    return TrajectoryBatch::from_triples(std::move(triples), true_mdp.n_states,
                                         true_mdp.n_actions);
}

TabularMdp estimate_model(const TrajectoryBatch& batch, const TabularMdp& template_mdp,
                          double smoothing) {
    if (!(smoothing >= 0.0)) throw std::invalid_argument("smoothing must be nonnegative");
    const std::size_t n = template_mdp.n_states;
    const std::size_t m = template_mdp.n_actions;
    if (batch.n_states() != n || batch.n_actions() != m)
        throw std::invalid_argument("trajectory batch does not match the template model");

    std::vector<Eigen::MatrixXd> counts(m, Eigen::MatrixXd::Zero(idx(n), idx(n)));
    for (const auto& t : batch.transitions_observed) counts[t.a](idx(t.x), idx(t.y)) += 1.0;

    TabularMdp sim = template_mdp;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t x = 0; x < n; ++x) {
            const double total = batch.counts(idx(x), idx(a));
            const double denom = total + smoothing * static_cast<double>(n);
            auto row = sim.transitions[a].row(idx(x));
            if (denom <= 0.0) {
                row.setConstant(1.0 / static_cast<double>(n));
            } else {
                row = (counts[a].row(idx(x)).array() + smoothing) / denom;
                row /= row.sum();
            }
        }
    }
    return sim;
}

double l1_radius(double count, std::size_t n_states, double delta_pair) {
    if (n_states <= 1) return 0.0;
    if (count <= 0.0) return 2.0;
    const double n = static_cast<double>(n_states);
    // ln(2^n - 2) without forming 2^n.
    const double log_support = n * std::log(2.0) + std::log1p(-std::pow(2.0, 1.0 - n));
    const double radius = std::sqrt(2.0 * (log_support - std::log(delta_pair)) / count);
    return std::min(2.0, radius);
}

ErrorBound l1_error_bound(const TrajectoryBatch& batch, std::size_t n_states,
                          double confidence_delta) {
    if (!(confidence_delta > 0.0 && confidence_delta < 1.0))
        throw std::invalid_argument("confidence_delta must lie in (0,1)");
    const auto m = batch.n_actions();
    const double delta_pair = confidence_delta / static_cast<double>(n_states * m);
    ErrorBound bound{Eigen::MatrixXd(batch.counts.rows(), batch.counts.cols())};
    for (Eigen::Index x = 0; x < bound.e.rows(); ++x)
        for (Eigen::Index a = 0; a < bound.e.cols(); ++a)
            bound.e(x, a) = l1_radius(batch.counts(x, a), n_states, delta_pair);
    return bound;
}

ErrorBound true_mismeasure(const TabularMdp& true_mdp, const TabularMdp& sim_mdp) {
    if (true_mdp.n_states != sim_mdp.n_states || true_mdp.n_actions != sim_mdp.n_actions)
        throw std::invalid_argument("models differ in dimensions");
    ErrorBound out = ErrorBound::zeros(true_mdp.n_states, true_mdp.n_actions);
    for (std::size_t a = 0; a < true_mdp.n_actions; ++a)
        out.e.col(idx(a)) =
            (true_mdp.transitions[a] - sim_mdp.transitions[a]).cwiseAbs().rowwise().sum();
    return out;
}

bool bound_is_valid(const ErrorBound& bound, const ErrorBound& mismeasure, double tol) {
    if (bound.e.rows() != mismeasure.e.rows() || bound.e.cols() != mismeasure.e.cols())
        throw std::invalid_argument("error tables differ in shape");
    return ((bound.e - mismeasure.e).array() >= -tol).all();
}

}  // namespace safepi
