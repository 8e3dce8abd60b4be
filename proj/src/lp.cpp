#include "demix/lp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "demix/errors.hpp"

namespace demix::lp {

FeasibilityResult simplex_feasible(const Eigen::MatrixXd& E_in, const Eigen::VectorXd& f_in,
                                   double tol) {
  const int m = static_cast<int>(E_in.rows());
  const int n = static_cast<int>(E_in.cols());
  if (f_in.size() != m) throw DimensionError("simplex_feasible: rhs size mismatch");
  if (m == 0) return {true, Eigen::VectorXd::Zero(n)};

  // Equilibrate rows, then flip signs so the rhs is nonnegative and the
  // artificial variables form a feasible starting basis.
  Eigen::MatrixXd E = E_in;
  Eigen::VectorXd f = f_in;
  for (int i = 0; i < m; ++i) {
    double s = std::max(E.row(i).cwiseAbs().maxCoeff(), std::abs(f[i]));
    if (s < 1e-300) s = 1.0;
    E.row(i) /= s;
    f[i] /= s;
    if (f[i] < 0) {
      E.row(i) = -E.row(i);
      f[i] = -f[i];
    }
  }

  // Tableau over [original | artificial | rhs]; phase-1 cost row minimizes the
  // artificial sum. cost[j] holds the reduced cost of column j, obj the
  // negated artificial sum.
  const int total = n + m;
  Eigen::MatrixXd T(m, total + 1);
  T.block(0, 0, m, n) = E;
  T.block(0, n, m, m) = Eigen::MatrixXd::Identity(m, m);
  T.col(total) = f;
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(total + 1);
  for (int i = 0; i < m; ++i) cost -= T.row(i);
  cost.segment(n, m).setZero();

  const long cap = 200 + 50L * (m + n);
  for (long iter = 0; iter <= cap; ++iter) {
    int entering = -1;
    for (int j = 0; j < total; ++j) {
      if (cost[j] < -tol) {
        entering = j;  // Bland: first improving index
        break;
      }
    }
    if (entering < 0) break;

    int leaving = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      const double a = T(i, entering);
      if (a > tol) {
        const double ratio = T(i, total) / a;
        if (leaving < 0 || ratio < best_ratio - 1e-15 ||
            (ratio < best_ratio + 1e-15 && basis[i] < basis[leaving])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
    }
    if (leaving < 0) {
      // Phase-1 objective is bounded below by zero, so an unbounded ray means
      // the numbers have degraded past the pivot tolerance.
      throw NumericalError("simplex_feasible: unbounded phase-1 direction");
    }
    if (iter == cap)
      throw ConvergenceError("simplex_feasible: pivot cap reached", cap, -cost[total]);

    const double pivot = T(leaving, entering);
    T.row(leaving) /= pivot;
    for (int i = 0; i < m; ++i) {
      if (i != leaving && std::abs(T(i, entering)) > 0.0)
        T.row(i) -= T(i, entering) * T.row(leaving);
    }
    cost -= cost[entering] * T.row(leaving);
    basis[leaving] = entering;
  }

  double artificial_sum = 0.0;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    const double value = T(i, total);
    if (basis[i] >= n)
      artificial_sum += std::abs(value);
    else
      x[basis[i]] = value;
  }
  if (artificial_sum <= 1e-7 * (1.0 + f.cwiseAbs().sum()))
    return {true, (x.array() < 0).select(0.0, x)};
  return {false, Eigen::VectorXd()};
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& V, const Eigen::VectorXd& g, double tol,
                     long max_iterations) {
  const int n = static_cast<int>(V.cols());
  if (g.size() != V.rows()) throw DimensionError("nnls: size mismatch");
  if (max_iterations <= 0) max_iterations = 30 + 6L * n;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<int> passive;
  std::vector<char> in_passive(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd w = V.transpose() * g;
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());

  auto solve_passive = [&](const std::vector<int>& set) {
    Eigen::MatrixXd sub(V.rows(), static_cast<Eigen::Index>(set.size()));
    for (std::size_t c = 0; c < set.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = V.col(set[c]);
    return Eigen::VectorXd(sub.colPivHouseholderQr().solve(g));
  };

  long iterations = 0;
  while (true) {
    int entering = -1;
    double best = tol * scale;
    for (int j = 0; j < n; ++j) {
      if (!in_passive[static_cast<std::size_t>(j)] && w[j] > best) {
        best = w[j];
        entering = j;
      }
    }
    if (entering < 0) break;
    passive.push_back(entering);
    in_passive[static_cast<std::size_t>(entering)] = 1;

    while (true) {
      if (++iterations > max_iterations)
        throw ConvergenceError("nnls: active-set cycle cap reached", iterations,
                               (V * x - g).norm());
      Eigen::VectorXd z = solve_passive(passive);
      bool interior = true;
      for (Eigen::Index c = 0; c < z.size(); ++c) {
        if (z[c] <= 0.0) {
          interior = false;
          break;
        }
      }
      if (interior) {
        for (std::size_t c = 0; c < passive.size(); ++c) x[passive[c]] = z[static_cast<Eigen::Index>(c)];
        break;
      }
      double alpha = 1.0;
      for (std::size_t c = 0; c < passive.size(); ++c) {
        const double zc = z[static_cast<Eigen::Index>(c)];
        if (zc <= 0.0) {
          const double xc = x[passive[c]];
          const double step = xc / (xc - zc);
          alpha = std::min(alpha, step);
        }
      }
      std::vector<int> next;
      for (std::size_t c = 0; c < passive.size(); ++c) {
        const int j = passive[c];
        const double moved = x[j] + alpha * (z[static_cast<Eigen::Index>(c)] - x[j]);
        if (z[static_cast<Eigen::Index>(c)] <= 0.0 && moved <= tol * scale) {
          x[j] = 0.0;
          in_passive[static_cast<std::size_t>(j)] = 0;
        } else {
          x[j] = moved;
          next.push_back(j);
        }
      }
      passive = std::move(next);
      if (passive.empty()) break;
    }
    if (passive.empty()) {
      // Entering column was immediately pushed back out; its dual cannot
      // improve, stop with the current (zero on this column) iterate.
      w = V.transpose() * (g - V * x);
      w[entering] = 0.0;
      continue;
    }
    w = V.transpose() * (g - V * x);
  }
  return x;
}

}  // namespace demix::lp
