#include "demix/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "demix/errors.hpp"
#include "demix/lp.hpp"

namespace demix::solver {

double DemixProblem::radius(int block) const {
  if (block < 0 || block >= n) throw InvalidInputError("DemixProblem::radius: bad block");
  const auto& x = x_true[static_cast<std::size_t>(block)];
  return penalties[static_cast<std::size_t>(block)] == cones::Penalty::L1 ? x.lpNorm<1>()
                                                                          : x.lpNorm<Eigen::Infinity>();
}

void DemixProblem::validate() const {
  if (d < 1 || m < 1 || n < 1) throw DimensionError("DemixProblem: empty dimensions");
  if (m > d) throw DimensionError("DemixProblem: more measurements than ambient dimension");
  if (static_cast<int>(penalties.size()) != n || static_cast<int>(x_true.size()) != n)
    throw DimensionError("DemixProblem: block count mismatch");
  if (rotations.d != d || rotations.count() != n)
    throw DimensionError("DemixProblem: rotation set mismatch");
  for (const auto& x : x_true)
    if (x.size() != d) throw DimensionError("DemixProblem: block size mismatch");
  if (!identity_A && (A.rows() != m || A.cols() != d))
    throw DimensionError("DemixProblem: A shape mismatch");
  if (identity_A && m != d)
    throw DimensionError("DemixProblem: identity A needs m == d");
  if (w.size() != d) throw DimensionError("DemixProblem: noise size mismatch");
  if (z0.size() != m) throw DimensionError("DemixProblem: observation size mismatch");
}

namespace {

Eigen::VectorXd sparse_sign_block(int d, long sparsity, rngkit::Prng& prng) {
  if (sparsity < 0 || sparsity > d)
    throw InvalidInputError("synthesize_problem: sparsity outside [0, d]");
  // Uniform support via partial Fisher-Yates over the index pool.
  std::vector<int> pool(static_cast<std::size_t>(d));
  std::iota(pool.begin(), pool.end(), 0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (long j = 0; j < sparsity; ++j) {
    const std::uint64_t r = prng.next_u64() % static_cast<std::uint64_t>(d - j);
    std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(j) + r]);
    x[pool[static_cast<std::size_t>(j)]] = (prng.next_u64() & 1) ? 1.0 : -1.0;
  }
  return x;
}

Eigen::VectorXd full_sign_block(int d, rngkit::Prng& prng) {
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x[i] = (prng.next_u64() & 1) ? 1.0 : -1.0;
  return x;
}

}  // namespace

DemixProblem synthesize_problem(int d, int m, const std::vector<BlockSpec>& blocks,
                                double noise_scale, const rngkit::SeedStream& stream,
                                bool identity_A) {
  if (d < 1) throw DimensionError("synthesize_problem: d must be positive");
  if (m < 1 || m > d) throw DimensionError("synthesize_problem: need 1 <= m <= d");
  if (blocks.empty()) throw InvalidInputError("synthesize_problem: no blocks");
  if (noise_scale < 0) throw InvalidInputError("synthesize_problem: negative noise scale");
  if (identity_A && m != d)
    throw InvalidInputError("synthesize_problem: identity A requires m == d");

  DemixProblem problem;
  problem.d = d;
  problem.m = m;
  problem.n = static_cast<int>(blocks.size());
  problem.identity_A = identity_A;

  problem.rotations = rngkit::sample_rotations(d, problem.n, stream.child(0));

  if (!identity_A) {
    problem.A = rngkit::gaussian_matrix(m, d, stream.child(1));
    if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(problem.A).rank() < m) {
      problem.A = rngkit::gaussian_matrix(m, d, stream.child(1).child(1));
      const int rank =
          static_cast<int>(Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(problem.A).rank());
      if (rank < m) throw RankError("synthesize_problem: Gaussian A rank deficient twice", rank);
    }
  }

  const Eigen::VectorXd direction = rngkit::gaussian_vector(d, stream.child(2));
  const double norm = direction.norm();
  if (norm < 1e-300) throw NumericalError("synthesize_problem: degenerate noise direction");
  problem.w = (noise_scale / norm) * direction;

  Eigen::VectorXd superposition = problem.w;
  for (int i = 0; i < problem.n; ++i) {
    rngkit::Prng prng(stream.child(3 + static_cast<std::uint64_t>(i)));
    const auto& spec = blocks[static_cast<std::size_t>(i)];
    Eigen::VectorXd x = spec.penalty == cones::Penalty::L1
                            ? sparse_sign_block(d, spec.sparsity, prng)
                            : full_sign_block(d, prng);
    superposition += problem.rotations.rotations[static_cast<std::size_t>(i)] * x;
    problem.penalties.push_back(spec.penalty);
    problem.x_true.push_back(std::move(x));
  }
  problem.z0 = identity_A ? superposition : Eigen::VectorXd(problem.A * superposition);
  problem.validate();
  return problem;
}

namespace {

// Shared projected-gradient core: minimize ||P(sum_i U_i x_i) - c||^2 over
// per-block feasible sets, where P projects onto the row space of A (identity
// when fully observed). project(i, v) must return the feasible-set projection
// for block i.
struct GradientPieces {
  Eigen::VectorXd residual;  // P r - c
  double objective = 0.0;
};

template <typename ApplyP>
GradientPieces evaluate(const std::vector<Eigen::VectorXd>& x,
                        const rngkit::RotationSet& rotations, const Eigen::VectorXd& c,
                        const ApplyP& apply_p) {
  const int d = rotations.d;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < x.size(); ++i) r += rotations.rotations[i] * x[i];
  GradientPieces pieces;
  pieces.residual = apply_p(r) - c;
  pieces.objective = pieces.residual.squaredNorm();
  return pieces;
}

// Largest eigenvalue of the stacked quadratic form by power iteration:
// 20 rounds or relative change below 1e-6.
template <typename ApplyP>
double operator_norm_sq(const rngkit::RotationSet& rotations, const ApplyP& apply_p) {
  const int d = rotations.d;
  const int n = rotations.count();
  std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(n));
  // Deterministic probe: fixed-key counter noise, independent of callers.
  rngkit::Prng prng(rngkit::SeedStream(0x706f776572ULL));
  double norm_sq = 0.0;
  for (auto& blk : v) {
    blk.resize(d);
    for (int i = 0; i < d; ++i) blk[i] = prng.next_gaussian();
    norm_sq += blk.squaredNorm();
  }
  double scale = std::sqrt(norm_sq);
  for (auto& blk : v) blk /= scale;

  double eig = 0.0;
  for (int round = 0; round < 20; ++round) {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i) r += rotations.rotations[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    const Eigen::VectorXd pr = apply_p(r);
    double next_eig = 0.0;
    std::vector<Eigen::VectorXd> next(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      next[static_cast<std::size_t>(i)] =
          rotations.rotations[static_cast<std::size_t>(i)].transpose() * pr;
      next_eig += next[static_cast<std::size_t>(i)].squaredNorm();
    }
    next_eig = std::sqrt(next_eig);
    if (next_eig < 1e-300) return 1.0;  // zero operator; any step works
    for (auto& blk : next) blk /= next_eig;
    v = std::move(next);
    if (round > 0 && std::abs(next_eig - eig) <= 1e-6 * next_eig) {
      eig = next_eig;
      break;
    }
    eig = next_eig;
  }
  return eig;
}

template <typename ApplyP, typename Project>
DemixSolution projected_gradient(const rngkit::RotationSet& rotations,
                                 const Eigen::VectorXd& c, const ApplyP& apply_p,
                                 const Project& project, std::vector<Eigen::VectorXd> x,
                                 const SolverConfig& config) {
  const int n = rotations.count();
  const double lipschitz = 2.0 * operator_norm_sq(rotations, apply_p);
  double step = 1.0 / std::max(lipschitz, 1e-12);

  GradientPieces cur = evaluate(x, rotations, c, apply_p);
  DemixSolution solution;
  std::vector<Eigen::VectorXd> grad(static_cast<std::size_t>(n));
  std::vector<Eigen::VectorXd> next(static_cast<std::size_t>(n));

  for (long iter = 1; iter <= config.max_iterations; ++iter) {
    for (int i = 0; i < n; ++i)
      grad[static_cast<std::size_t>(i)] =
          2.0 * (rotations.rotations[static_cast<std::size_t>(i)].transpose() * cur.residual);

    double moved_sq = 0.0;
    GradientPieces cand;
    while (true) {
      moved_sq = 0.0;
      for (int i = 0; i < n; ++i) {
        next[static_cast<std::size_t>(i)] =
            project(i, x[static_cast<std::size_t>(i)] - step * grad[static_cast<std::size_t>(i)]);
        moved_sq += (next[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]).squaredNorm();
      }
      cand = evaluate(next, rotations, c, apply_p);
      if (config.step_rule == SolverConfig::StepRule::FixedInverseL) break;
      // Armijo model test for the backtracking rule.
      double inner = 0.0;
      for (int i = 0; i < n; ++i)
        inner += grad[static_cast<std::size_t>(i)].dot(next[static_cast<std::size_t>(i)] -
                                                       x[static_cast<std::size_t>(i)]);
      if (cand.objective <= cur.objective + inner + moved_sq / (2.0 * step) + 1e-15 ||
          step < 1e-18)
        break;
      step *= 0.5;
    }

    if (cand.objective > cur.objective + 1e-9 * std::max(1.0, cur.objective))
      throw NumericalError("solve: objective increased; step size computation is inconsistent");

    const double mapping_norm = std::sqrt(moved_sq) / step;
    x.swap(next);
    cur = cand;
    solution.iterations = iter;
    if (config.step_rule == SolverConfig::StepRule::Backtracking) step *= 1.1;
    if (mapping_norm <= config.gradient_tolerance) {
      solution.converged = true;
      break;
    }
  }

  solution.x_hat = std::move(x);
  solution.objective = cur.objective;
  return solution;
}

}  // namespace

DemixSolution solve_constrained(const DemixProblem& problem, const SolverConfig& config) {
  problem.validate();
  if (config.max_iterations < 1 || config.gradient_tolerance <= 0)
    throw InvalidInputError("solve_constrained: bad solver configuration");

  std::vector<double> radii(static_cast<std::size_t>(problem.n));
  for (int i = 0; i < problem.n; ++i) radii[static_cast<std::size_t>(i)] = problem.radius(i);

  DemixSolution solution;
  if (problem.identity_A) {
    auto apply_p = [](const Eigen::VectorXd& v) { return v; };
    auto project = [&](int i, const Eigen::VectorXd& v) {
      return problem.penalties[static_cast<std::size_t>(i)] == cones::Penalty::L1
                 ? cones::project_l1_ball(v, radii[static_cast<std::size_t>(i)])
                 : cones::project_linf_ball(v, radii[static_cast<std::size_t>(i)]);
    };
    std::vector<Eigen::VectorXd> x0(static_cast<std::size_t>(problem.n),
                                    Eigen::VectorXd::Zero(problem.d));
    solution = projected_gradient(problem.rotations, problem.z0, apply_p, project,
                                  std::move(x0), config);
  } else {
    const rngkit::PinvOperator pinv(problem.A);
    const Eigen::VectorXd c = pinv.apply(problem.z0);
    auto apply_p = [&](const Eigen::VectorXd& v) { return pinv.project_row_space(v); };
    auto project = [&](int i, const Eigen::VectorXd& v) {
      return problem.penalties[static_cast<std::size_t>(i)] == cones::Penalty::L1
                 ? cones::project_l1_ball(v, radii[static_cast<std::size_t>(i)])
                 : cones::project_linf_ball(v, radii[static_cast<std::size_t>(i)]);
    };
    std::vector<Eigen::VectorXd> x0(static_cast<std::size_t>(problem.n),
                                    Eigen::VectorXd::Zero(problem.d));
    solution = projected_gradient(problem.rotations, c, apply_p, project, std::move(x0), config);
  }

  for (int i = 0; i < problem.n; ++i) {
    const auto& xh = solution.x_hat[static_cast<std::size_t>(i)];
    const double value = problem.penalties[static_cast<std::size_t>(i)] == cones::Penalty::L1
                             ? xh.lpNorm<1>()
                             : xh.lpNorm<Eigen::Infinity>();
    solution.per_block_constraint_slack.push_back(value - radii[static_cast<std::size_t>(i)]);
  }
  return solution;
}

bool check_success(const DemixProblem& problem, const DemixSolution& solution,
                   double tolerance) {
  if (static_cast<int>(solution.x_hat.size()) != problem.n)
    throw DimensionError("check_success: block count mismatch");
  for (int i = 0; i < problem.n; ++i) {
    const auto& x_hat = solution.x_hat[static_cast<std::size_t>(i)];
    const auto& x_true = problem.x_true[static_cast<std::size_t>(i)];
    if (x_hat.size() != x_true.size())
      throw DimensionError("check_success: block size mismatch");
    // Entrywise strict comparison: a non-finite coordinate must count as a
    // failure, which a norm reduction would silently skip.
    for (long j = 0; j < x_hat.size(); ++j) {
      if (!(std::abs(x_hat[j] - x_true[j]) < tolerance)) return false;
    }
  }
  return true;
}

StabilityReport stability_report(const DemixProblem& problem, const DemixSolution& solution) {
  if (!solution.converged)
    throw InvalidInputError("stability_report: requires a converged solution");
  StabilityReport report;
  report.noise_norm = problem.w.norm();
  double worst = 0.0;
  for (int i = 0; i < problem.n; ++i) {
    const double err = (solution.x_hat[static_cast<std::size_t>(i)] -
                        problem.x_true[static_cast<std::size_t>(i)])
                           .norm();
    report.per_block_error.push_back(err);
    worst = std::max(worst, err);
  }
  report.ratio_defined = report.noise_norm > 0.0;
  report.ratio = report.ratio_defined ? worst / report.noise_norm : 0.0;
  return report;
}

ErcResult check_erc_small(const std::vector<cones::ConeSpec>& cone_list,
                          const rngkit::RotationSet& rotations) {
  if (cone_list.empty()) throw InvalidInputError("check_erc_small: no cones");
  const int d = cone_list[0].d;
  if (d > 20) throw InvalidInputError("check_erc_small: d must be at most 20");
  const int n = static_cast<int>(cone_list.size());
  if (rotations.d != d || rotations.count() != n)
    throw DimensionError("check_erc_small: rotation set mismatch");

  std::vector<Eigen::MatrixXd> rotated(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& c = cone_list[static_cast<std::size_t>(i)];
    c.validate();
    Eigen::MatrixXd v;
    if (c.variant == cones::ConeVariant::Orthant)
      v = Eigen::MatrixXd::Identity(d, d);
    else if (c.variant == cones::ConeVariant::PolyhedralGenerators)
      v = c.generators;
    else
      throw UnsupportedConeError("check_erc_small: cones must be in generator form");
    // Pointedness: no nonzero nonnegative combination may vanish.
    {
      Eigen::MatrixXd e(d + 1, v.cols());
      e.topRows(d) = v;
      e.bottomRows(1).setOnes();
      Eigen::VectorXd f = Eigen::VectorXd::Zero(d + 1);
      f[d] = 1.0;
      if (lp::simplex_feasible(e, f).feasible)
        throw UnsupportedConeError("check_erc_small: cone " + std::to_string(i) +
                                   " is not pointed");
    }
    rotated[static_cast<std::size_t>(i)] = rotations.rotations[static_cast<std::size_t>(i)] * v;
  }

  ErcResult result;
  result.overall = true;
  for (int i = 0; i < n; ++i) {
    // Shared ray at index i: Q_i V_i a + sum_{j != i} Q_j V_j b_j = 0 with
    // a >= 0 normalized, b >= 0. Feasible means the certificate fails here.
    long cols = 0;
    for (const auto& blk : rotated) cols += blk.cols();
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d + 1, cols);
    long col = 0;
    for (int j = 0; j < n; ++j) {
      const auto& blk = rotated[static_cast<std::size_t>(j)];
      e.block(0, col, d, blk.cols()) = blk;
      if (j == i) e.block(d, col, 1, blk.cols()).setOnes();
      col += blk.cols();
    }
    Eigen::VectorXd f = Eigen::VectorXd::Zero(d + 1);
    f[d] = 1.0;
    const bool shared_ray = lp::simplex_feasible(e, f).feasible;
    result.per_index.push_back(!shared_ray);
    result.overall = result.overall && !shared_ray;
  }
  return result;
}

DemixSolution solve_cone_program(const std::vector<cones::ConeSpec>& cone_list,
                                 const rngkit::RotationSet& rotations,
                                 const std::vector<Eigen::VectorXd>& starts,
                                 const SolverConfig& config) {
  if (cone_list.empty()) throw InvalidInputError("solve_cone_program: no cones");
  const int d = cone_list[0].d;
  const int n = static_cast<int>(cone_list.size());
  if (rotations.d != d || rotations.count() != n)
    throw DimensionError("solve_cone_program: rotation set mismatch");
  if (static_cast<int>(starts.size()) != n)
    throw DimensionError("solve_cone_program: start block count mismatch");

  std::vector<Eigen::VectorXd> x0;
  x0.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cone_list[static_cast<std::size_t>(i)].validate();
    x0.push_back(
        cones::project_cone(cone_list[static_cast<std::size_t>(i)], starts[static_cast<std::size_t>(i)]).point);
  }

  auto apply_p = [](const Eigen::VectorXd& v) { return v; };
  auto project = [&](int i, const Eigen::VectorXd& v) {
    return cones::project_cone(cone_list[static_cast<std::size_t>(i)], v).point;
  };
  DemixSolution solution = projected_gradient(rotations, Eigen::VectorXd::Zero(d), apply_p,
                                              project, std::move(x0), config);
  solution.per_block_constraint_slack.assign(static_cast<std::size_t>(n), 0.0);
  return solution;
}

}  // namespace demix::solver
