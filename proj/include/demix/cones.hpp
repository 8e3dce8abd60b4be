#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "demix/rngkit.hpp"

namespace demix::cones {

enum class Penalty { L1, LINF };

std::string penalty_name(Penalty p);
Penalty penalty_from_name(const std::string& name);

enum class ConeVariant {
  Trivial,                 // {0}
  Subspace,                // column span of an orthonormal basis
  Orthant,                 // nonnegative orthant
  PolyhedralGenerators,    // conic hull of the generator columns
  PolyhedralInequalities,  // {x : B x <= 0}
  DescentCone,             // feasible directions of a penalty at an anchor
};

std::string variant_name(ConeVariant v);

// Closed convex cone in R^d. Only the payload matching the variant is
// populated; validate() enforces the representation invariants (orthonormal
// subspace basis within 1e-10, nonzero generator columns and normal rows,
// equal-magnitude anchors for the sup-norm penalty).
struct ConeSpec {
  ConeVariant variant = ConeVariant::Trivial;
  int d = 0;
  Eigen::MatrixXd basis;       // Subspace: d x r
  Eigen::MatrixXd generators;  // PolyhedralGenerators: d x N
  Eigen::MatrixXd normals;     // PolyhedralInequalities: K x d
  Penalty penalty = Penalty::L1;  // DescentCone only
  Eigen::VectorXd anchor;         // DescentCone only

  static ConeSpec trivial(int d);
  static ConeSpec subspace(Eigen::MatrixXd basis);
  static ConeSpec full_space(int d);
  static ConeSpec orthant(int d);
  static ConeSpec from_generators(Eigen::MatrixXd generators);
  static ConeSpec from_inequalities(Eigen::MatrixXd normals);
  static ConeSpec descent(Penalty penalty, Eigen::VectorXd anchor);

  void validate() const;
};

struct ProjectionResult {
  Eigen::VectorXd point;
  // Dimension of the face whose relative interior contains the projection:
  // the count of strictly positive coordinates for orthants, the subspace
  // dimension for subspaces, the rank of the generators active at `tol` for
  // generator form, and d minus the rank of the active normals for
  // inequality form.
  int face_dim = 0;
};

// Euclidean projection onto an explicit cone (descent cones unsupported
// here). Activity decisions use tol scaled by ||g||.
ProjectionResult project_cone(const ConeSpec& cone, const Eigen::VectorXd& g,
                              double tol = 1e-9);

// Projection onto {x : ||x||_1 <= radius} by soft thresholding at the exact
// level, and onto {x : ||x||_inf <= radius} by clamping.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius);
Eigen::VectorXd project_linf_ball(const Eigen::VectorXd& v, double radius);

// Projection onto {z >= 0, sum z = tau}. Also reports the water level theta
// with z = max(y - theta, 0); callers use -2*theta as the derivative in tau
// of the squared distance.
struct SimplexProjection {
  Eigen::VectorXd point;
  double theta = 0.0;
};
SimplexProjection project_scaled_simplex(const Eigen::VectorXd& y, double tau);

// Squared distance from g to tau times the penalty subdifferential at the
// anchor. tau = 0 gives ||g||^2. The map is convex in tau.
double subdiff_distance(Penalty penalty, const Eigen::VectorXd& anchor,
                        const Eigen::VectorXd& g, double tau);

// One-sided derivative in tau of subdiff_distance; nondecreasing in tau.
double subdiff_distance_derivative(Penalty penalty, const Eigen::VectorXd& anchor,
                                   const Eigen::VectorXd& g, double tau);

enum class SdimMethod { MonteCarlo, L1Formula, ClosedForm };
std::string sdim_method_name(SdimMethod m);

// Statistical dimension estimate: mean squared norm of the Gaussian
// projection onto the cone.
struct SdimEstimate {
  double value = 0.0;
  double std_error = 0.0;
  SdimMethod method = SdimMethod::MonteCarlo;
  long trials = 0;
};

// Monte Carlo estimator. Explicit cones average ||proj(g)||^2; descent cones
// average the tau-minimized subdifferential distance, which equals the
// squared distance to the polar and has the same mean by the Pythagorean
// split of ||g||^2. Requires trials >= 100. Exact degenerate cases (trivial
// cone, full space, zero anchor) return closed-form values.
SdimEstimate sdim_mc(const ConeSpec& cone, long trials, const rngkit::SeedStream& stream,
                     int threads = 1);

// Tight variational upper bound for the descent cone of the l1 norm at a
// k-sparse point in R^d, exact up to 2*sqrt(k*d): minimizes
// k(1+tau^2) + (d-k) E[(|g|-tau)_+^2] over tau >= 0. Accepts real k so the
// phase-diagram curve can be solved at fractional sparsity.
double sdim_l1_bound(double k, double d);
SdimEstimate sdim_l1_formula(long k, int d);

// E[(|g|-tau)_+^2] for standard normal g, in closed form via the Gaussian
// tail. Exposed so tests can pin it against quadrature.
double clipped_square_moment(double tau);

// Exact statistical dimension when a closed form exists for the variant
// (trivial, subspace, orthant, full space, zero-anchor or sign-vector
// descent cones).
std::optional<double> sdim_closed_form(const ConeSpec& cone);

// Polar cone. Orthant maps to the nonpositive orthant in generator form,
// subspaces to their orthogonal complement, generator and inequality forms
// swap (rows of B generate the polar). Descent cones are unsupported.
ConeSpec polar(const ConeSpec& cone);

}  // namespace demix::cones
