#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "demix/solver.hpp"

namespace demix::experiments {

enum class ExperimentKind {
  // Three constituents at full observation (identity A, m = d): two sparse
  // sign-valued blocks under the l1 penalty plus a dense sign block under the
  // sup norm.
  SparseSparseSign,
  // Two l1-penalized sparse blocks observed through an m x d Gaussian map.
  UndersampledSparseSparse,
};

std::string experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);

struct PhaseGridConfig {
  ExperimentKind kind = ExperimentKind::SparseSparseSign;
  int d = 60;
  std::vector<long> m_values;  // SparseSparseSign requires every m == d
  long k_min = 1;
  long k_max = 18;
  long trials = 25;
  double eta = 0.1;  // level for the predicted transition band
  std::uint64_t root_seed = 42;
  int threads = 1;
  solver::SolverConfig solver;

  void validate() const;
};

struct CellResult {
  long m = 0;
  long k1 = 0;
  long k2 = 0;
  long trials = 0;
  long successes = 0;
  long nonconverged = 0;

  double success_rate() const {
    return trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials);
  }
};

struct PhaseGrid {
  PhaseGridConfig config;
  std::vector<CellResult> cells;  // canonical order: (m, k1, k2) ascending
  double wall_seconds = 0.0;
};

// Runs every (m, k1, k2) cell for `trials` independent instances. Per-trial
// seeds derive from (root_seed, m, k1, k2, trial), so any cell re-runs to
// identical counts in isolation. When csv is given, rows stream out in
// canonical order as soon as each cell's predecessors are done.
PhaseGrid run_phase_grid(const PhaseGridConfig& config, std::ostream* csv = nullptr);

// Header: experiment,d,m,k1,k2,trials,successes,nonconverged,success_rate
void write_csv(const PhaseGrid& grid, std::ostream& out);

// Success-rate field for one m: entry (i, j) is the rate at
// k1 = k_min + i, k2 = k_min + j.
Eigen::MatrixXd success_field(const PhaseGrid& grid, long m);

// Points (k1, k2) where the predicted total statistical dimension equals m,
// swept over k1 in steps of `step`. The sign-block experiment's dense block
// consumes a fixed d/2 of the budget, which is accounted for internally.
// Empty when the curve misses the sampled window.
std::vector<Eigen::Vector2d> predicted_curve(const PhaseGridConfig& config, long m,
                                             double step = 0.05);

// Same equation displaced by +-lambda_star(eta, sigma at the center curve),
// bracketing the predicted transition.
struct PredictedBand {
  std::vector<Eigen::Vector2d> center;
  std::vector<Eigen::Vector2d> lower;   // earlier transition: total = m - width
  std::vector<Eigen::Vector2d> upper;   // later transition: total = m + width
};
PredictedBand predicted_band(const PhaseGridConfig& config, long m, double step = 0.05);

struct ContourSet {
  double level = 0.0;
  std::vector<std::vector<Eigen::Vector2d>> polylines;  // (k1, k2) vertices
};

// Marching-squares level sets of the field with linear interpolation along
// cell edges; saddle cells split by the center average. Coordinates come out
// in (k1, k2) units with the first field row at k1 = k_min.
std::vector<ContourSet> extract_contours(const Eigen::MatrixXd& field, double k_min,
                                         const std::vector<double>& levels);

// Fraction of contour vertices within `radius` grid units of the curve.
// Returns 1 for an empty contour (nothing to violate).
double fraction_near_curve(const ContourSet& contour,
                           const std::vector<Eigen::Vector2d>& curve, double radius);

// Self-contained SVG: one grayscale rect per cell (white at rate 1), contour
// polylines at 0.95 (brown), 0.5 (red), 0.05 (pink), the predicted curve in
// yellow, and labeled k1/k2 axes.
std::string render_heatmap(const Eigen::MatrixXd& field, double k_min,
                           const std::vector<ContourSet>& contours,
                           const std::vector<Eigen::Vector2d>& predicted,
                           const std::string& title);

}  // namespace demix::experiments
