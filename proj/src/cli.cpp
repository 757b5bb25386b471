#include "safepi/cli.hpp"
#include "safepi/io.hpp"
#include "safepi/oracle.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <map>
#include <optional>
#include <ostream>

namespace safepi {

namespace {

constexpr double kCheckTol = 1e-4;
constexpr double kGridStep = 1e-3;
constexpr double kSafetyTol = 1e-7;
constexpr double kSlack = 1e-9;

// Raised when a command's outputs break an invariant (exit 3).
struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Paths {
    std::string mdp, true_mdp, sim_mdp, templ, trajectories, error, policy, baseline;
    std::string out, error_out;
};

struct Flags {
    std::optional<double> gamma_override, lambda_max, step_alpha0, outer_tol, m_b;
    std::optional<std::size_t> max_outer_iters;
    double confidence_delta = 0.05;
    std::optional<double> smoothing;
    std::size_t steps = 1000, episode_length = 50;
    std::uint64_t seed = 0;
    int track = 1;
};

struct Problem {
    TabularMdp sim;
    ErrorBound error;
    double m_b = 0.0;
    std::optional<TabularMdp> truth;
};

std::string require(const std::string& value, const char* role) {
    if (value.empty()) throw InputError(fmt::format("missing required input '{}'", role));
    return value;
}

TabularMdp load_mdp(const std::string& path, const Flags& flags) {
    TabularMdp mdp = mdp_from_json(read_json_file(path));
    if (flags.gamma_override) {
        mdp.gamma = *flags.gamma_override;
        if (!(mdp.gamma > 0.0 && mdp.gamma < 1.0)) throw InputError("gamma-override not in (0,1)");
    }
    return mdp;
}

SaddleConfig saddle_config(const Flags& flags) {
    SaddleConfig cfg;
    cfg.lambda_max = flags.lambda_max;
    cfg.step_alpha0 = flags.step_alpha0;
    if (flags.outer_tol) cfg.outer_tol = *flags.outer_tol;
    if (flags.max_outer_iters) cfg.max_outer_iters = *flags.max_outer_iters;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    return cfg;
}

void check_outputs(const TabularMdp& mdp, const ErrorBound& error) {
    auto violations = validate_mdp(mdp);
    for (auto& v : error.validate()) violations.push_back(std::move(v));
    if (!violations.empty()) throw InvariantError("estimated outputs invalid: " + violations.front());
}

std::pair<TabularMdp, ErrorBound> estimate_from(const Paths& paths, const Flags& flags) {
    const TabularMdp templ = load_mdp(require(paths.templ, "template"), flags);
    const TrajectoryBatch batch = trajectories_from_jsonl(
        read_text_file(require(paths.trajectories, "trajectories")), templ.n_states,
        templ.n_actions);
    if (!(flags.confidence_delta > 0.0 && flags.confidence_delta < 1.0))
        throw InputError("confidence-delta must lie in (0,1)");
    const double smoothing = flags.smoothing.value_or(default_smoothing(templ.n_states));
    if (!(smoothing >= 0.0)) throw InputError("smoothing must be nonnegative");
    TabularMdp sim = estimate_model(batch, templ, smoothing);
    ErrorBound error = l1_error_bound(batch, templ.n_states, flags.confidence_delta);
    check_outputs(sim, error);
    return {std::move(sim), std::move(error)};
}

Problem load_problem(const Paths& paths, const Flags& flags, bool need_truth) {
    Problem p;
    if (!paths.sim_mdp.empty()) {
        p.sim = load_mdp(paths.sim_mdp, flags);
        p.error = error_from_json(read_json_file(require(paths.error, "error")), p.sim.n_states,
                                  p.sim.n_actions);
    } else if (!paths.trajectories.empty() || !paths.templ.empty()) {
        std::tie(p.sim, p.error) = estimate_from(paths, flags);
    } else {
        throw InputError("missing required input 'sim_mdp' (or 'trajectories' with 'template')");
    }
    if (need_truth || !paths.true_mdp.empty()) {
        p.truth = load_mdp(require(paths.true_mdp, "true_mdp"), flags);
        if (p.truth->n_states != p.sim.n_states || p.truth->n_actions != p.sim.n_actions)
            throw InputError("true and simulated models differ in dimensions");
    }
    if (flags.m_b) {
        p.m_b = *flags.m_b;
    } else if (!paths.baseline.empty()) {
        if (!p.truth) throw InputError("missing required input 'true_mdp' for the baseline return");
        const PolicyTable baseline = policy_from_json(read_json_file(paths.baseline));
        if (baseline.state_space() != StateSpace::plain || baseline.n_rows() != p.sim.n_states ||
            baseline.n_actions() != p.sim.n_actions)
            throw InputError("baseline policy does not match the model");
        p.m_b = baseline_threshold(*p.truth, baseline);
    } else {
        throw InputError("missing required input 'm_b' (or 'baseline' with 'true_mdp')");
    }
    if (!std::isfinite(p.m_b)) throw InputError("m_b must be finite");
    return p;
}

int cmd_estimate(const Paths& paths, const Flags& flags) {
    require(paths.out, "out");
    require(paths.error_out, "error_out");
    const auto [sim, error] = estimate_from(paths, flags);
    write_json_file(paths.out, mdp_to_json(sim));
    write_json_file(paths.error_out, error_to_json(error));
    return kExitOk;
}

int cmd_solve(const Paths& paths, const Flags& flags) {
    require(paths.out, "out");
    const Problem p = load_problem(paths, flags, false);
    const SaddleConfig cfg = saddle_config(flags);
    const SaddleSolution sol = solve_saddle(p.sim, p.error, p.m_b, cfg);
    const PerformanceReport report = suboptimality_bound(p.sim, p.error, sol);
    write_json_file(paths.out, solution_to_json(sol, report));
    return sol.feasible ? kExitOk : kExitInfeasible;
}

json check(const std::string& name, double value, double tol, bool pass) {
    return {{"name", name}, {"value", value}, {"tolerance", tol}, {"status", pass ? "pass" : "fail"}};
}

json skipped(const std::string& name, const std::string& reason) {
    return {{"name", name}, {"status", "not applicable: " + reason}};
}

int cmd_verify(const Paths& paths, const Flags& flags) {
    require(paths.out, "out");
    const Problem p = load_problem(paths, flags, true);
    const TabularMdp& truth = *p.truth;
    const SaddleConfig cfg = saddle_config(flags);
    const SaddleSolution sol = solve_saddle(p.sim, p.error, p.m_b, cfg);
    const PerformanceReport report = suboptimality_bound(p.sim, p.error, sol, truth);
    const bool valid_e = bound_is_valid(p.error, true_mismeasure(truth, p.sim), 1e-12);
    const auto grid = lambda_grid(sol.lambda_max, kGridStep);

    json checks = json::array();

    const DualityCheck sd = surrogate_duality_gap(p.sim, p.error, p.m_b, grid, cfg);
    if (sd.primal_feasible)
        checks.push_back(check("surrogate_strong_duality", sd.gap, kCheckTol, sd.gap <= kCheckTol));
    else
        checks.push_back(skipped("surrogate_strong_duality", "surrogate problem infeasible"));

    const DualityCheck td = strong_duality_gap(truth, p.sim, p.m_b, grid);
    if (td.primal_feasible)
        checks.push_back(check("strong_duality", td.gap, kCheckTol, td.gap <= kCheckTol));
    else
        checks.push_back(skipped("strong_duality", "constrained problem infeasible"));

    const double agreement = std::abs(sol.dual_value - sd.dual);
    checks.push_back(check("dual_agreement", agreement, kCheckTol, agreement <= kCheckTol));

    bool monotone = true;
    for (std::size_t k = 1; k < sol.f_min_trace.size(); ++k)
        monotone = monotone && sol.f_min_trace[k] <= sol.f_min_trace[k - 1];
    checks.push_back(check("f_min_monotone", monotone ? 0.0 : 1.0, 0.0, monotone));

    if (!valid_e) {
        const std::string reason = "bound invalid";
        checks.push_back(skipped("surrogate_domination", reason));
        checks.push_back(skipped("safety", reason));
        checks.push_back(skipped("br_domination", reason));
        checks.push_back(skipped("performance_sandwich", reason));
    } else {
        const double gap =
            surrogate_gap(truth, p.sim, p.error, sol.policy_hat, sol.lambda_hat, p.m_b);
        checks.push_back(check("surrogate_domination", gap, kSlack, gap >= -kSlack));

        const double br_excess = *report.br_exact - report.br_upper;
        checks.push_back(check("br_domination", br_excess, kSlack, br_excess <= kSlack));

        if (!report.feasible_certified) {
            checks.push_back(skipped("safety", "feasibility not certified"));
            checks.push_back(skipped("performance_sandwich", "feasibility not certified"));
        } else {
            const double true_return = policy_return(truth, sol.policy_hat.restrict_track(1));
            const double margin = true_return - p.m_b;
            checks.push_back(check("safety", margin, kSafetyTol, margin >= -kSafetyTol));
            try {
                const OracleResult oracle = exact_constrained_optimum(truth, p.sim, p.m_b);
                const double gap_j =
                    oracle.primal_value - policy_return(p.sim, sol.policy_hat.restrict_track(1));
                const bool ok = gap_j >= -kSlack && gap_j <= report.suboptimality_bound + kSlack;
                checks.push_back(check("performance_sandwich", gap_j, kSlack, ok));
            } catch (const std::length_error&) {
                checks.push_back(skipped("performance_sandwich", "instance exceeds enumeration guard"));
            }
        }
    }

    bool all_pass = true;
    for (const auto& c : checks) all_pass = all_pass && c["status"] != "fail";
    write_json_file(paths.out, {{"checks", checks},
                                {"all_pass", all_pass},
                                {"solution", solution_to_json(sol, report)}});
    return all_pass ? kExitOk : kExitVerifyFailed;
}

int cmd_evaluate(const Paths& paths, const Flags& flags, std::ostream& out) {
    const TabularMdp mdp = load_mdp(require(paths.mdp, "mdp"), flags);
    PolicyTable policy = policy_from_json(read_json_file(require(paths.policy, "policy")));
    if (policy.state_space() == StateSpace::augmented) {
        if (flags.track != 0 && flags.track != 1) throw InputError("track must be 0 or 1");
        if (policy.n_rows() != 2 * mdp.n_states) throw InputError("policy does not match the model");
        policy = policy.restrict_track(flags.track);
    }
    if (policy.n_rows() != mdp.n_states || policy.n_actions() != mdp.n_actions)
        throw InputError("policy does not match the model");
    const double value = policy_return(mdp, policy);
    out << fmt::format("{:.17g}\n", value);
    if (!paths.out.empty()) write_json_file(paths.out, {{"return", value}});
    return kExitOk;
}

int cmd_simulate(const Paths& paths, const Flags& flags) {
    require(paths.out, "out");
    const TabularMdp mdp = load_mdp(require(paths.mdp, "mdp"), flags);
    const PolicyTable policy = policy_from_json(read_json_file(require(paths.policy, "policy")));
    if (policy.state_space() != StateSpace::plain || policy.n_rows() != mdp.n_states ||
        policy.n_actions() != mdp.n_actions)
        throw InputError("policy does not match the model");
    if (flags.steps == 0 || flags.episode_length == 0)
        throw InputError("steps and episode-length must be positive");
    const TrajectoryBatch batch =
        simulate_trajectories(mdp, policy, flags.steps, flags.episode_length, flags.seed);
    write_text_file(paths.out, trajectories_to_jsonl(batch));
    return kExitOk;
}

void add_solver_flags(CLI::App* cmd, Flags& flags) {
    cmd->add_option("--gamma-override", flags.gamma_override, "Replace the discount factor");
    cmd->add_option("--lambda-max", flags.lambda_max, "Multiplier cap");
    cmd->add_option("--step-alpha0", flags.step_alpha0, "Initial subgradient step");
    cmd->add_option("--outer-tol", flags.outer_tol, "Multiplier convergence threshold");
    cmd->add_option("--max-outer-iters", flags.max_outer_iters, "Outer iteration limit");
    cmd->add_option("--confidence-delta", flags.confidence_delta,
                    "Failure probability of the error bound when estimating");
    cmd->add_option("--smoothing", flags.smoothing, "Additive smoothing when estimating");
    cmd->add_option("--m-b", flags.m_b, "Safety threshold");
}

void add_problem_inputs(CLI::App* cmd, Paths& paths) {
    cmd->add_option("--sim-mdp", paths.sim_mdp, "Simulated MDP JSON");
    cmd->add_option("--error", paths.error, "Error bound JSON");
    cmd->add_option("--trajectories", paths.trajectories, "Trajectory JSONL (estimate inline)");
    cmd->add_option("--template", paths.templ, "Template MDP JSON for inline estimation");
    cmd->add_option("--baseline", paths.baseline, "Baseline policy JSON (M_B from --true-mdp)");
    cmd->add_option("--true-mdp", paths.true_mdp, "True MDP JSON");
    cmd->add_option("--out", paths.out, "Report path");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Safe policy improvement from a simulated MDP and a transition error bound", "safepi"};
    app.require_subcommand(1);
    Paths paths;
    Flags flags;

    auto* estimate = app.add_subcommand("estimate", "Estimate P^ and the L1 error bound");
    estimate->add_option("--trajectories", paths.trajectories, "Trajectory JSONL");
    estimate->add_option("--template", paths.templ, "Template MDP JSON");
    estimate->add_option("--out", paths.out, "Simulated MDP output path");
    estimate->add_option("--error-out", paths.error_out, "Error bound output path");
    estimate->add_option("--confidence-delta", flags.confidence_delta, "Failure probability");
    estimate->add_option("--smoothing", flags.smoothing, "Additive smoothing");
    estimate->add_option("--gamma-override", flags.gamma_override, "Replace the discount factor");

    auto* solve = app.add_subcommand("solve", "Run the saddle-point solver");
    add_problem_inputs(solve, paths);
    add_solver_flags(solve, flags);

    auto* verify = app.add_subcommand("verify", "Check the solver against oracles on a true model");
    add_problem_inputs(verify, paths);
    add_solver_flags(verify, flags);

    auto* evaluate = app.add_subcommand("evaluate", "Exact discounted return of a policy");
    evaluate->add_option("--mdp", paths.mdp, "MDP JSON");
    evaluate->add_option("--policy", paths.policy, "Policy JSON");
    evaluate->add_option("--track", flags.track, "Track of an augmented policy to evaluate");
    evaluate->add_option("--out", paths.out, "Optional JSON output path");
    evaluate->add_option("--gamma-override", flags.gamma_override, "Replace the discount factor");

    auto* simulate = app.add_subcommand("simulate", "Roll out a policy and write trajectories");
    simulate->add_option("--mdp", paths.mdp, "MDP JSON");
    simulate->add_option("--policy", paths.policy, "Policy JSON");
    simulate->add_option("--steps", flags.steps, "Number of transitions");
    simulate->add_option("--episode-length", flags.episode_length, "Steps between restarts");
    simulate->add_option("--seed", flags.seed, "Random seed");
    simulate->add_option("--out", paths.out, "Trajectory JSONL output path");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitMalformedInput;
    }

    try {
        if (estimate->parsed()) return cmd_estimate(paths, flags);
        if (solve->parsed()) return cmd_solve(paths, flags);
        if (verify->parsed()) return cmd_verify(paths, flags);
        if (evaluate->parsed()) return cmd_evaluate(paths, flags, out);
        if (simulate->parsed()) return cmd_simulate(paths, flags);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitMalformedInput;
    } catch (const InvariantError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvariantViolation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvariantViolation;
    }
    return kExitMalformedInput;
}

}  // namespace safepi
