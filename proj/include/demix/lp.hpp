#pragma once

#include <Eigen/Dense>

namespace demix::lp {

struct FeasibilityResult {
  bool feasible = false;
  Eigen::VectorXd x;  // a feasible point when feasible, else empty
};

// Decides whether {x : E x = f, x >= 0} is nonempty. Dense phase-1 simplex
// with Bland's rule; rows are equilibrated before the solve. Intended for the
// small systems this project builds (tens of rows and columns).
FeasibilityResult simplex_feasible(const Eigen::MatrixXd& E, const Eigen::VectorXd& f,
                                   double tol = 1e-9);

// Nonnegative least squares: minimize ||V lambda - g|| over lambda >= 0 by
// the Lawson-Hanson active-set method. max_iterations <= 0 selects a cap
// proportional to the column count; exceeding the cap raises a
// ConvergenceError carrying iterate diagnostics.
Eigen::VectorXd nnls(const Eigen::MatrixXd& V, const Eigen::VectorXd& g,
                     double tol = 1e-10, long max_iterations = 0);

}  // namespace demix::lp
