#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "demix/cones.hpp"
#include "demix/rngkit.hpp"

namespace demix::solver {

struct SolverConfig {
  enum class StepRule { FixedInverseL, Backtracking };

  long max_iterations = 50000;
  // Convergence threshold on the projected-gradient mapping norm
  // ||x - x_next|| / step.
  double gradient_tolerance = 1e-7;
  // Strict infinity-norm recovery threshold used by check_success.
  double success_tolerance = 1e-5;
  StepRule step_rule = StepRule::FixedInverseL;
};

// Superposition recovery instance: observe z0 = A(sum_i U_i x_i + w) and ask
// for the constituents back, each constrained to its penalty ball through the
// true value.
struct DemixProblem {
  int d = 0;
  int m = 0;
  int n = 0;
  std::vector<cones::Penalty> penalties;
  std::vector<Eigen::VectorXd> x_true;
  rngkit::RotationSet rotations;  // the U_i
  bool identity_A = false;
  Eigen::MatrixXd A;  // empty when identity_A
  Eigen::VectorXd w;
  Eigen::VectorXd z0;

  double radius(int block) const;  // penalty value of the true block
  void validate() const;
};

struct BlockSpec {
  cones::Penalty penalty = cones::Penalty::L1;
  // l1 blocks: number of nonzero (+-1) entries. Sup-norm blocks ignore it and
  // carry a full random sign pattern.
  long sparsity = 0;
};

// Random instance: Haar rotations, uniform-support sign-valued sparse blocks,
// Gaussian A (identity permitted when m = d), noise of exact norm
// noise_scale along a random direction. A rank-deficient Gaussian draw is
// resampled once.
DemixProblem synthesize_problem(int d, int m, const std::vector<BlockSpec>& blocks,
                                double noise_scale, const rngkit::SeedStream& stream,
                                bool identity_A = false);

struct DemixSolution {
  std::vector<Eigen::VectorXd> x_hat;
  double objective = 0.0;
  long iterations = 0;
  bool converged = false;
  std::vector<double> per_block_constraint_slack;  // f_i(x_hat_i) - f_i(x_true_i)
};

// Projected gradient on the least-squares objective ||pinv(A)(A r - z0)||^2,
// r = sum_i U_i x_i, with per-block penalty-ball projections. Fixed step 1/L
// from a power-iteration estimate of the stacked operator norm, or Armijo
// backtracking. Non-convergence is reported in the result, never thrown.
DemixSolution solve_constrained(const DemixProblem& problem, const SolverConfig& config = {});

// Strict per-block infinity-norm comparison against the true constituents.
bool check_success(const DemixProblem& problem, const DemixSolution& solution,
                   double tolerance = 1e-5);

struct StabilityReport {
  double noise_norm = 0.0;
  std::vector<double> per_block_error;  // Euclidean errors
  double ratio = 0.0;                   // max block error / noise norm
  bool ratio_defined = false;           // false for noiseless instances
};

// Requires a converged solution.
StabilityReport stability_report(const DemixProblem& problem, const DemixSolution& solution);

struct ErcResult {
  std::vector<bool> per_index;  // true: only the origin is shared at this index
  bool overall = false;
};

// Exact small-scale recovery certificate: for each index, decides by LP
// whether the negated rotated cone meets the conic sum of the others beyond
// the origin. Cones must be pointed and in generator form (orthants are
// converted); d <= 20.
ErcResult check_erc_small(const std::vector<cones::ConeSpec>& cone_list,
                          const rngkit::RotationSet& rotations);

// Least-squares program min ||sum_i U_i s_i||^2 with s_i constrained to the
// given cones: the synthetic counterpart of a demixing instance whose
// feasible directions at the truth are exactly these cones. Recovery means
// every block returns to the origin. Starts are projected onto the cones.
DemixSolution solve_cone_program(const std::vector<cones::ConeSpec>& cone_list,
                                 const rngkit::RotationSet& rotations,
                                 const std::vector<Eigen::VectorXd>& starts,
                                 const SolverConfig& config = {});

}  // namespace demix::solver
