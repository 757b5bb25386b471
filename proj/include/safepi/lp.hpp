#pragma once

#include <Eigen/Dense>

namespace safepi {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    Eigen::VectorXd x;
};

/**
 * maximize c^T x  subject to  a_eq x = b_eq,  a_ub x <= b_ub,  x >= 0.
 *
 * Dense two-phase tableau simplex with Bland's rule. Meant for the few dozen
 * variables of the oracle LPs; either constraint block may have zero rows.
 */
LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& a_eq,
                  const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& a_ub,
                  const Eigen::VectorXd& b_ub, double eps = 1e-11);

}  // namespace safepi
