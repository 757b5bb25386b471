#include "safepi/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace safepi {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

template <typename T>
T field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw InputError(fmt::format("missing field '{}'", name));
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw InputError(fmt::format("field '{}': {}", name, e.what()));
    }
}

Eigen::MatrixXd matrix_from_json(const json& j, std::size_t rows, std::size_t cols,
                                 const char* name) {
    if (!j.is_array() || j.size() != rows)
        throw InputError(fmt::format("'{}' must have {} rows", name, rows));
    Eigen::MatrixXd out(idx(rows), idx(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw InputError(fmt::format("'{}' row {} must have {} entries", name, r, cols));
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number())
                throw InputError(fmt::format("'{}'[{}][{}] is not a number", name, r, c));
            out(idx(r), idx(c)) = j[r][c].get<double>();
        }
    }
    return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : "; ") + s;
    return out;
}

}  // namespace

json mdp_to_json(const TabularMdp& mdp) {
    json transitions = json::array();
    for (std::size_t x = 0; x < mdp.n_states; ++x) {
        json per_action = json::array();
        for (std::size_t a = 0; a < mdp.n_actions; ++a) {
            json row = json::array();
            for (std::size_t y = 0; y < mdp.n_states; ++y) row.push_back(mdp.transition(x, a, y));
            per_action.push_back(std::move(row));
        }
        transitions.push_back(std::move(per_action));
    }
    json out = {{"n_states", mdp.n_states},
                {"n_actions", mdp.n_actions},
                {"gamma", mdp.gamma},
                {"r_max", mdp.r_max},
                {"initial_state", mdp.initial_state},
                {"rewards", matrix_to_json(mdp.rewards)},
                {"transitions", std::move(transitions)}};
    if (mdp.initial_distribution) {
        json p0 = json::array();
        for (Eigen::Index x = 0; x < mdp.initial_distribution->size(); ++x)
            p0.push_back((*mdp.initial_distribution)(x));
        out["initial_distribution"] = std::move(p0);
    }
    return out;
}

TabularMdp mdp_from_json(const json& j) {
    const auto n = field<std::size_t>(j, "n_states");
    const auto m = field<std::size_t>(j, "n_actions");
    if (n == 0 || m == 0) throw InputError("n_states and n_actions must be positive");
    TabularMdp mdp = make_empty_mdp(n, m, field<double>(j, "gamma"), field<double>(j, "r_max"),
                                    field<std::size_t>(j, "initial_state"));
    mdp.rewards = matrix_from_json(field<json>(j, "rewards"), n, m, "rewards");

    const json t = field<json>(j, "transitions");
    if (!t.is_array() || t.size() != n)
        throw InputError(fmt::format("'transitions' must have {} states", n));
    for (std::size_t x = 0; x < n; ++x) {
        const Eigen::MatrixXd rows = matrix_from_json(t[x], m, n, "transitions");
        for (std::size_t a = 0; a < m; ++a) mdp.transitions[a].row(idx(x)) = rows.row(idx(a));
    }
    if (j.contains("initial_distribution")) {
        const Eigen::MatrixXd p0 =
            matrix_from_json(json::array({j["initial_distribution"]}), 1, n, "initial_distribution");
        mdp.initial_distribution = p0.row(0).transpose();
    }
    const auto violations = validate_mdp(mdp);
    if (!violations.empty()) throw InputError("invalid MDP: " + join(violations));
    return mdp;
}

json policy_to_json(const PolicyTable& policy) {
    json table;
    if (policy.kind() == PolicyKind::deterministic)
        table = policy.actions();
    else
        table = matrix_to_json(policy.probabilities());
    return {{"kind", policy.kind() == PolicyKind::deterministic ? "deterministic" : "stochastic"},
            {"state_space", policy.state_space() == StateSpace::plain ? "plain" : "augmented"},
            {"n_actions", policy.n_actions()},
            {"table", std::move(table)}};
}

PolicyTable policy_from_json(const json& j) {
    const auto kind = field<std::string>(j, "kind");
    const auto space_name = field<std::string>(j, "state_space");
    StateSpace space;
    if (space_name == "plain")
        space = StateSpace::plain;
    else if (space_name == "augmented")
        space = StateSpace::augmented;
    else
        throw InputError(fmt::format("unknown state_space '{}'", space_name));

    const json table = field<json>(j, "table");
    if (!table.is_array() || table.empty()) throw InputError("'table' must be a nonempty array");
    PolicyTable out;
    try {
        if (kind == "deterministic") {
            const auto actions = table.get<std::vector<std::size_t>>();
            const std::size_t m = j.contains("n_actions")
                                      ? field<std::size_t>(j, "n_actions")
                                      : *std::max_element(actions.begin(), actions.end()) + 1;
            out = PolicyTable::deterministic(actions, m, space);
        } else if (kind == "stochastic") {
            if (!table[0].is_array()) throw InputError("stochastic table rows must be arrays");
            out = PolicyTable::stochastic(
                matrix_from_json(table, table.size(), table[0].size(), "table"), space);
        } else {
            throw InputError(fmt::format("unknown policy kind '{}'", kind));
        }
    } catch (const json::exception& e) {
        throw InputError(fmt::format("policy table: {}", e.what()));
    } catch (const std::invalid_argument& e) {
        throw InputError(fmt::format("policy table: {}", e.what()));
    }
    const auto violations = out.validate();
    if (!violations.empty()) throw InputError("invalid policy: " + join(violations));
    return out;
}

json error_to_json(const ErrorBound& error) { return {{"e", matrix_to_json(error.e)}}; }

ErrorBound error_from_json(const json& j, std::size_t n_states, std::size_t n_actions) {
    ErrorBound out{matrix_from_json(field<json>(j, "e"), n_states, n_actions, "e")};
    const auto violations = out.validate();
    if (!violations.empty()) throw InputError("invalid error bound: " + join(violations));
    return out;
}

std::string trajectories_to_jsonl(const TrajectoryBatch& batch) {
    std::string out;
    for (const auto& t : batch.transitions_observed)
        out += json{{"x", t.x}, {"a", t.a}, {"y", t.y}}.dump() + "\n";
    return out;
}

TrajectoryBatch trajectories_from_jsonl(const std::string& text, std::size_t n_states,
                                        std::size_t n_actions) {
    std::vector<Transition> triples;
    std::istringstream in(text);
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw InputError(fmt::format("trajectory line {}: {}", lineno, e.what()));
        }
        try {
            triples.push_back({field<std::size_t>(j, "x"), field<std::size_t>(j, "a"),
                               field<std::size_t>(j, "y")});
        } catch (const InputError& e) {
            throw InputError(fmt::format("trajectory line {}: {}", lineno, e.what()));
        }
    }
    try {
        return TrajectoryBatch::from_triples(std::move(triples), n_states, n_actions);
    } catch (const std::out_of_range& e) {
        throw InputError(e.what());
    }
}

json solution_to_json(const SaddleSolution& solution, const PerformanceReport& report) {
    json bounds = {{"penalty_term", report.penalty_term},
                   {"br_upper", report.br_upper},
                   {"suboptimality_bound", report.suboptimality_bound},
                   {"feasible_certified", report.feasible_certified},
                   {"sim_return_track0", report.sim_return_track0},
                   {"sim_return_track1", report.sim_return_track1},
                   {"penalized_return_track1", report.penalized_return_track1}};
    if (report.br_exact) bounds["br_exact"] = *report.br_exact;
    return {{"lambda_hat", solution.lambda_hat},
            {"dual_value", solution.dual_value},
            {"feasible", solution.feasible},
            {"m_b", solution.m_b},
            {"lambda_max", solution.lambda_max},
            {"converged", solution.converged},
            {"outer_iterations", solution.outer_iterations},
            {"policy", policy_to_json(solution.policy_hat)},
            {"traces",
             {{"lambda", solution.lambda_trace},
              {"f_min", solution.f_min_trace},
              {"subgradient", solution.subgradient_trace},
              {"inner_iterations", solution.inner_iterations}}},
            {"bounds", std::move(bounds)}};
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw InputError(fmt::format("'{}': {}", path, e.what()));
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
    out << text;
}

void write_json_file(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace safepi
