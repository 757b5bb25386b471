#include "safepi/lp.hpp"

#include <stdexcept>
#include <vector>

namespace safepi {

namespace {

struct Tableau {
    Eigen::MatrixXd t;                // rows: constraints, then the objective row
    std::vector<Eigen::Index> basis;  // basic column per constraint row

    Eigen::Index rows() const { return t.rows() - 1; }
    Eigen::Index rhs() const { return t.cols() - 1; }

    void pivot(Eigen::Index r, Eigen::Index col) {
        t.row(r) /= t(r, col);
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            if (i != r && t(i, col) != 0.0) t.row(i) -= t(i, col) * t.row(r);
        basis[static_cast<std::size_t>(r)] = col;
    }

    void load_objective(const Eigen::VectorXd& cost) {
        const Eigen::Index obj = rows();
        t.row(obj).setZero();
        for (Eigen::Index j = 0; j < cost.size(); ++j) t(obj, j) = -cost(j);
        for (Eigen::Index i = 0; i < rows(); ++i) {
            const double cb = cost(basis[static_cast<std::size_t>(i)]);
            if (cb != 0.0) t.row(obj) += cb * t.row(i);
        }
    }

    // Maximizes the loaded objective over columns [0, n_allowed). Bland's rule.
    LpStatus run(Eigen::Index n_allowed, double eps) {
        const Eigen::Index obj = rows();
        for (;;) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < n_allowed; ++j)
                if (t(obj, j) < -eps) {
                    enter = j;
                    break;
                }
            if (enter < 0) return LpStatus::optimal;

            Eigen::Index leave = -1;
            double best_ratio = 0.0;
            for (Eigen::Index i = 0; i < rows(); ++i) {
                if (t(i, enter) <= eps) continue;
                const double ratio = t(i, rhs()) / t(i, enter);
                const auto bi = basis[static_cast<std::size_t>(i)];
                if (leave < 0 || ratio < best_ratio - eps ||
                    (ratio <= best_ratio + eps && bi < basis[static_cast<std::size_t>(leave)])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave < 0) return LpStatus::unbounded;
            pivot(leave, enter);
        }
    }
};

}  // namespace

LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& a_eq,
                  const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& a_ub,
                  const Eigen::VectorXd& b_ub, double eps) {
    const Eigen::Index nv = c.size();
    const Eigen::Index n_eq = a_eq.rows();
    const Eigen::Index n_ub = a_ub.rows();
    if ((n_eq > 0 && a_eq.cols() != nv) || (n_ub > 0 && a_ub.cols() != nv) ||
        b_eq.size() != n_eq || b_ub.size() != n_ub)
        throw std::invalid_argument("LP dimensions are inconsistent");

    const Eigen::Index m = n_eq + n_ub;
    const Eigen::Index n_struct = nv + n_ub;  // decision variables and slacks
    const Eigen::Index n_cols = n_struct + m;

    Tableau tab;
    tab.t = Eigen::MatrixXd::Zero(m + 1, n_cols + 1);
    tab.basis.resize(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        auto row = tab.t.row(i);
        if (i < n_eq) {
            row.head(nv) = a_eq.row(i);
            row(n_cols) = b_eq(i);
        } else {
            const Eigen::Index k = i - n_eq;
            row.head(nv) = a_ub.row(k);
            row(nv + k) = 1.0;
            row(n_cols) = b_ub(k);
        }
        if (row(n_cols) < 0.0) row.head(n_struct) *= -1.0, row(n_cols) *= -1.0;
        row(n_struct + i) = 1.0;
        tab.basis[static_cast<std::size_t>(i)] = n_struct + i;
    }

    const double scale = 1.0 + (m > 0 ? tab.t.col(n_cols).head(m).cwiseAbs().maxCoeff() : 0.0);

    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n_cols);
    phase1.tail(m).setConstant(-1.0);
    tab.load_objective(phase1);
    tab.run(n_cols, eps);

    LpResult out;
    if (tab.t(m, n_cols) < -1e-9 * scale) {
        out.status = LpStatus::infeasible;
        return out;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (tab.basis[static_cast<std::size_t>(i)] < n_struct) continue;
        for (Eigen::Index j = 0; j < n_struct; ++j)
            if (std::abs(tab.t(i, j)) > eps) {
                tab.pivot(i, j);
                break;
            }
    }

    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n_cols);
    phase2.head(nv) = c;
    tab.load_objective(phase2);
    out.status = tab.run(n_struct, eps);
    if (out.status != LpStatus::optimal) return out;

    out.x = Eigen::VectorXd::Zero(nv);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto b = tab.basis[static_cast<std::size_t>(i)];
        if (b < nv) out.x(b) = tab.t(i, n_cols);
    }
    out.objective = c.dot(out.x);
    return out;
}

}  // namespace safepi
