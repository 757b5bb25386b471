#include "safepi/bounds.hpp"
#include "safepi/cli.hpp"
#include "safepi/estimation.hpp"
#include "safepi/io.hpp"
#include "safepi/oracle.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace safepi;

namespace {

TabularMdp make_mdp(Eigen::MatrixXd rewards, std::vector<Eigen::MatrixXd> transitions, double gamma,
                    double r_max, std::size_t initial_state) {
    TabularMdp mdp;
    mdp.n_states = static_cast<std::size_t>(rewards.rows());
    mdp.n_actions = static_cast<std::size_t>(rewards.cols());
    mdp.rewards = std::move(rewards);
    mdp.transitions = std::move(transitions);
    mdp.gamma = gamma;
    mdp.r_max = r_max;
    mdp.initial_state = initial_state;
    const auto problems = validate_mdp(mdp);
    if (!problems.empty()) throw std::invalid_argument(problems.front());
    return mdp;
}

}  // namespace

PYBIND11_MODULE(_safepi, m) {
    m.doc() = "Safe policy improvement in tabular MDPs";

    py::enum_<StateSpace>(m, "StateSpace")
        .value("plain", StateSpace::plain)
        .value("augmented", StateSpace::augmented);
    py::enum_<TrackCoupling>(m, "TrackCoupling")
        .value("independent", TrackCoupling::independent)
        .value("shared", TrackCoupling::shared);

    py::class_<TabularMdp>(m, "TabularMdp")
        .def(py::init(&make_mdp), py::arg("rewards"), py::arg("transitions"), py::arg("gamma"),
             py::arg("r_max") = 1.0, py::arg("initial_state") = 0)
        .def_readonly("n_states", &TabularMdp::n_states)
        .def_readonly("n_actions", &TabularMdp::n_actions)
        .def_readonly("rewards", &TabularMdp::rewards)
        .def_readonly("transitions", &TabularMdp::transitions)
        .def_readonly("gamma", &TabularMdp::gamma)
        .def_readonly("r_max", &TabularMdp::r_max)
        .def("start_distribution", &TabularMdp::start_distribution)
        .def("to_json", [](const TabularMdp& mdp) { return mdp_to_json(mdp).dump(); })
        .def_static("from_json", [](const std::string& text) { return mdp_from_json(json::parse(text)); });

    py::class_<ErrorBound>(m, "ErrorBound")
        .def(py::init([](Eigen::MatrixXd e) { return ErrorBound{std::move(e)}; }), py::arg("e"))
        .def_readwrite("e", &ErrorBound::e)
        .def_static("zeros", &ErrorBound::zeros);

    py::class_<PolicyTable>(m, "PolicyTable")
        .def_static("deterministic", &PolicyTable::deterministic, py::arg("actions"), py::arg("n_actions"),
                    py::arg("space") = StateSpace::plain)
        .def_static("stochastic", &PolicyTable::stochastic, py::arg("probabilities"),
                    py::arg("space") = StateSpace::plain)
        .def_static("uniform", &PolicyTable::uniform, py::arg("n_rows"), py::arg("n_actions"),
                    py::arg("space") = StateSpace::plain)
        .def_static("lift", &PolicyTable::lift)
        .def_property_readonly("n_rows", &PolicyTable::n_rows)
        .def_property_readonly("n_actions", &PolicyTable::n_actions)
        .def_property_readonly("state_space", &PolicyTable::state_space)
        .def("probabilities", &PolicyTable::probabilities)
        .def("restrict_track", &PolicyTable::restrict_track)
        .def("track_consistent", &PolicyTable::track_consistent, py::arg("tol") = 0.0)
        .def("__eq__", [](const PolicyTable& a, const PolicyTable& b) { return a == b; });

    py::class_<TrajectoryBatch>(m, "TrajectoryBatch")
        .def_readonly("counts", &TrajectoryBatch::counts)
        .def("__len__", [](const TrajectoryBatch& b) { return b.transitions_observed.size(); });

    py::class_<SaddleConfig>(m, "SaddleConfig")
        .def(py::init<>())
        .def_readwrite("lambda0", &SaddleConfig::lambda0)
        .def_readwrite("lambda_max", &SaddleConfig::lambda_max)
        .def_readwrite("step_alpha0", &SaddleConfig::step_alpha0)
        .def_readwrite("outer_tol", &SaddleConfig::outer_tol)
        .def_readwrite("outer_patience", &SaddleConfig::outer_patience)
        .def_readwrite("max_outer_iters", &SaddleConfig::max_outer_iters)
        .def_readwrite("literal_best_lambda", &SaddleConfig::literal_best_lambda)
        .def_readwrite("track_coupling", &SaddleConfig::track_coupling)
        .def_readwrite("feasible_side_extraction", &SaddleConfig::feasible_side_extraction);

    py::class_<SaddleSolution>(m, "SaddleSolution")
        .def_readonly("policy_hat", &SaddleSolution::policy_hat)
        .def_readonly("lambda_hat", &SaddleSolution::lambda_hat)
        .def_readonly("dual_value", &SaddleSolution::dual_value)
        .def_readonly("m_b", &SaddleSolution::m_b)
        .def_readonly("lambda_max", &SaddleSolution::lambda_max)
        .def_readonly("f_min_trace", &SaddleSolution::f_min_trace)
        .def_readonly("lambda_trace", &SaddleSolution::lambda_trace)
        .def_readonly("feasible", &SaddleSolution::feasible)
        .def_readonly("converged", &SaddleSolution::converged)
        .def_readonly("outer_iterations", &SaddleSolution::outer_iterations);

    py::class_<PerformanceReport>(m, "PerformanceReport")
        .def_readonly("penalty_term", &PerformanceReport::penalty_term)
        .def_readonly("br_upper", &PerformanceReport::br_upper)
        .def_readonly("br_exact", &PerformanceReport::br_exact)
        .def_readonly("suboptimality_bound", &PerformanceReport::suboptimality_bound)
        .def_readonly("feasible_certified", &PerformanceReport::feasible_certified);

    py::class_<Instance>(m, "Instance")
        .def_readonly("true_mdp", &Instance::true_mdp)
        .def_readonly("sim_mdp", &Instance::sim_mdp)
        .def_readonly("error", &Instance::error)
        .def_readonly("baseline", &Instance::baseline)
        .def_readonly("m_b", &Instance::m_b);

    py::class_<OracleResult>(m, "OracleResult")
        .def_readonly("best_policy", &OracleResult::best_policy)
        .def_readonly("primal_value", &OracleResult::primal_value)
        .def_readonly("dual_value", &OracleResult::dual_value)
        .def_readonly("feasible", &OracleResult::feasible)
        .def_readonly("lp_relaxation_value", &OracleResult::lp_relaxation_value);

    m.def("random_instance",
          [](std::size_t n_states, std::size_t n_actions, double gamma, double baseline_quality,
             std::uint64_t seed) {
              InstanceSpec spec;
              spec.n_states = n_states;
              spec.n_actions = n_actions;
              spec.gamma = gamma;
              spec.baseline_quality = baseline_quality;
              return random_instance(spec, seed);
          },
          py::arg("n_states") = 4, py::arg("n_actions") = 3, py::arg("gamma") = 0.9,
          py::arg("baseline_quality") = 0.0, py::arg("seed") = 0);
    m.def("policy_return", py::overload_cast<const TabularMdp&, const PolicyTable&>(&policy_return));
    m.def("policy_values", py::overload_cast<const TabularMdp&, const PolicyTable&>(&policy_values));
    m.def("simulate_trajectories", &simulate_trajectories, py::arg("true_mdp"), py::arg("baseline"),
          py::arg("n_steps"), py::arg("episode_length"), py::arg("seed"));
    m.def("estimate_model", &estimate_model, py::arg("batch"), py::arg("template_mdp"), py::arg("smoothing"));
    m.def("l1_error_bound", &l1_error_bound, py::arg("batch"), py::arg("n_states"),
          py::arg("confidence_delta") = 0.05);
    m.def("true_mismeasure", &true_mismeasure);
    m.def("bound_is_valid", &bound_is_valid, py::arg("bound"), py::arg("mismeasure"), py::arg("tol") = 0.0);
    m.def("solve_saddle", &solve_saddle, py::arg("sim"), py::arg("error"), py::arg("m_b"),
          py::arg("config") = SaddleConfig{});
    m.def("suboptimality_bound", &suboptimality_bound, py::arg("sim"), py::arg("error"), py::arg("solution"),
          py::arg("true_mdp") = std::nullopt, py::arg("coupling") = TrackCoupling::shared);
    m.def("exact_constrained_optimum", &exact_constrained_optimum, py::arg("true_mdp"), py::arg("sim"),
          py::arg("m_b"));
    m.def("run_cli", [](std::vector<std::string> args) {
        args.insert(args.begin(), "safepi");
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    });
}
