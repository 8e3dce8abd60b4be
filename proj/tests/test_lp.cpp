#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "demix/errors.hpp"
#include "demix/lp.hpp"
#include "demix/rngkit.hpp"
#include "doctest.h"

using demix::lp::nnls;
using demix::lp::simplex_feasible;

namespace {

// Brute-force feasibility oracle for {x : E x = f, x >= 0}: a nonempty
// feasible set that contains no line has a vertex, and every vertex is
// supported on some column subset. Enumerating all subsets (the instances
// are tiny) and solving least squares on each is therefore exact.
bool enumerate_feasible(const Eigen::MatrixXd& E, const Eigen::VectorXd& f) {
  const int c = static_cast<int>(E.cols());
  for (std::uint32_t mask = 0; mask < (1u << c); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < c; ++j)
      if (mask & (1u << j)) idx.push_back(j);
    Eigen::MatrixXd sub(E.rows(), static_cast<long>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) sub.col(static_cast<long>(j)) = E.col(idx[j]);
    Eigen::VectorXd xs;
    if (idx.empty()) {
      if (f.cwiseAbs().maxCoeff() <= 1e-8) return true;
      continue;
    }
    xs = sub.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(f);
    if ((sub * xs - f).cwiseAbs().maxCoeff() > 1e-7) continue;
    if (xs.minCoeff() >= -1e-9) return true;
  }
  return false;
}

// Oracle for min ||V lambda - g|| over lambda >= 0: at the optimum the
// restriction to its own support solves the unconstrained least-squares
// problem on that support with nonnegative coefficients, so scanning every
// support gives the exact optimal value.
double enumerate_nnls_residual(const Eigen::MatrixXd& V, const Eigen::VectorXd& g) {
  const int c = static_cast<int>(V.cols());
  double best = g.norm();  // empty support
  for (std::uint32_t mask = 1; mask < (1u << c); ++mask) {
    std::vector<int> idx;
    for (int j = 0; j < c; ++j)
      if (mask & (1u << j)) idx.push_back(j);
    Eigen::MatrixXd sub(V.rows(), static_cast<long>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) sub.col(static_cast<long>(j)) = V.col(idx[j]);
    const Eigen::VectorXd xs =
        sub.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(g);
    if (xs.minCoeff() < -1e-9) continue;
    best = std::min(best, (sub * xs - g).norm());
  }
  return best;
}

Eigen::MatrixXd small_int_matrix(int rows, int cols, demix::rngkit::Prng& prng) {
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i)
      m(i, j) = static_cast<double>(static_cast<long>(prng.next_u64() % 5)) - 2.0;
  return m;
}

}  // namespace

TEST_CASE("simplex feasibility on pinned instances") {
  Eigen::MatrixXd E(1, 2);
  E << 1, 1;
  Eigen::VectorXd f(1);
  f << 1;
  auto r = simplex_feasible(E, f);
  REQUIRE(r.feasible);
  CHECK((E * r.x - f).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(r.x.minCoeff() >= -1e-9);

  f << -1;  // sum of nonnegatives cannot be negative
  CHECK_FALSE(simplex_feasible(E, f).feasible);

  Eigen::MatrixXd E2(2, 2);
  E2 << 1, -1, 1, 1;
  Eigen::VectorXd f2(2);
  f2 << 0, -2;  // x1 = x2 and x1 + x2 = -2 forces negative entries
  CHECK_FALSE(simplex_feasible(E2, f2).feasible);

  // Zero system is trivially feasible at the origin.
  auto z = simplex_feasible(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2));
  CHECK(z.feasible);

  // Inconsistent zero rows.
  Eigen::VectorXd fz(2);
  fz << 0, 1;
  CHECK_FALSE(simplex_feasible(Eigen::MatrixXd::Zero(2, 3), fz).feasible);
}

TEST_CASE("simplex feasibility agrees with subset enumeration on random instances") {
  demix::rngkit::Prng prng(demix::rngkit::SeedStream(60601));
  int feasible_count = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + static_cast<int>(prng.next_u64() % 4);
    const int cols = 1 + static_cast<int>(prng.next_u64() % 7);
    const Eigen::MatrixXd E = small_int_matrix(rows, cols, prng);
    Eigen::VectorXd f(rows);
    for (int i = 0; i < rows; ++i)
      f[i] = static_cast<double>(static_cast<long>(prng.next_u64() % 7)) - 3.0;

    const bool oracle = enumerate_feasible(E, f);
    const auto result = simplex_feasible(E, f);
    CAPTURE(trial);
    CHECK(result.feasible == oracle);
    if (result.feasible) {
      ++feasible_count;
      CHECK((E * result.x - f).cwiseAbs().maxCoeff() <= 1e-7);
      CHECK(result.x.minCoeff() >= -1e-9);
    }
  }
  // The instance mix must exercise both outcomes for the test to mean much.
  CHECK(feasible_count >= 30);
  CHECK(feasible_count <= 170);
}

TEST_CASE("nnls solves pinned instances with certificates") {
  // Identity design: the solution clamps negative targets to zero.
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd g(2);
  g << 3, -2;
  Eigen::VectorXd lambda = nnls(V, g);
  CHECK(lambda[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(lambda[1] == doctest::Approx(0.0).epsilon(1e-12));

  // Gradient of the objective is nonnegative at zero, so zero is optimal.
  Eigen::MatrixXd V2(2, 2);
  V2 << 2, 1, 1, 3;
  Eigen::VectorXd g2(2);
  g2 << -1, -1;
  lambda = nnls(V2, g2);
  CHECK(lambda.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("nnls matches the support-enumeration oracle on random instances") {
  demix::rngkit::SeedStream root(70707);
  for (int trial = 0; trial < 120; ++trial) {
    const auto s = root.child(trial);
    demix::rngkit::Prng prng(s);
    const int rows = 2 + static_cast<int>(prng.next_u64() % 5);
    const int cols = 1 + static_cast<int>(prng.next_u64() % 6);
    const Eigen::MatrixXd V = demix::rngkit::gaussian_matrix(rows, cols, s.child(1));
    const Eigen::VectorXd g = demix::rngkit::gaussian_vector(rows, s.child(2));

    const Eigen::VectorXd lambda = nnls(V, g);
    CAPTURE(trial);
    REQUIRE(lambda.size() == cols);
    CHECK(lambda.minCoeff() >= -1e-10);

    // Karush-Kuhn-Tucker certificate: the negative gradient V^T (g - V l)
    // must be <= 0 everywhere and = 0 on the support.
    const Eigen::VectorXd w = V.transpose() * (g - V * lambda);
    for (int j = 0; j < cols; ++j) {
      CHECK(w[j] <= 1e-7);
      if (lambda[j] > 1e-8) CHECK(std::abs(w[j]) <= 1e-7);
    }

    const double oracle = enumerate_nnls_residual(V, g);
    CHECK((V * lambda - g).norm() == doctest::Approx(oracle).epsilon(1e-7));
  }
}

TEST_CASE("nnls raises a convergence error when capped") {
  const Eigen::MatrixXd V = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd g(3);
  g << 1, 2, 3;  // needs three active-set insertions
  CHECK_THROWS_AS(nnls(V, g, 1e-10, 1), demix::ConvergenceError);
  try {
    nnls(V, g, 1e-10, 1);
  } catch (const demix::ConvergenceError& e) {
    CHECK(e.iterations() >= 1);
    CHECK(e.residual() > 0.0);
  }
}
