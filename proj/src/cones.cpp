#include "demix/cones.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "demix/errors.hpp"
#include "demix/lp.hpp"
#include "demix/parallel.hpp"

namespace demix::cones {
namespace {

constexpr double kOrthonormalTol = 1e-10;

double gauss_pdf(double t) { return std::exp(-0.5 * t * t) * 0.3989422804014327; }
double gauss_tail(double t) { return 0.5 * std::erfc(t * M_SQRT1_2); }

int matrix_rank(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  return static_cast<int>(m.colPivHouseholderQr().rank());
}

bool is_sign_vector(const Eigen::VectorXd& x) {
  if (x.size() == 0) return false;
  const double c = std::abs(x[0]);
  if (c <= 0.0) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::abs(std::abs(x[i]) - c) > 1e-12 * c) return false;
  return true;
}

}  // namespace

std::string penalty_name(Penalty p) { return p == Penalty::L1 ? "l1" : "linf"; }

Penalty penalty_from_name(const std::string& name) {
  if (name == "l1") return Penalty::L1;
  if (name == "linf") return Penalty::LINF;
  throw InvalidInputError("unknown penalty: " + name);
}

std::string variant_name(ConeVariant v) {
  switch (v) {
    case ConeVariant::Trivial: return "trivial";
    case ConeVariant::Subspace: return "subspace";
    case ConeVariant::Orthant: return "orthant";
    case ConeVariant::PolyhedralGenerators: return "generators";
    case ConeVariant::PolyhedralInequalities: return "inequalities";
    case ConeVariant::DescentCone: return "descent_cone";
  }
  throw InvalidInputError("unknown cone variant");
}

ConeSpec ConeSpec::trivial(int d) {
  ConeSpec c;
  c.variant = ConeVariant::Trivial;
  c.d = d;
  c.validate();
  return c;
}

ConeSpec ConeSpec::subspace(Eigen::MatrixXd basis) {
  ConeSpec c;
  c.variant = ConeVariant::Subspace;
  c.d = static_cast<int>(basis.rows());
  c.basis = std::move(basis);
  c.validate();
  return c;
}

ConeSpec ConeSpec::full_space(int d) {
  return subspace(Eigen::MatrixXd::Identity(d, d));
}

ConeSpec ConeSpec::orthant(int d) {
  ConeSpec c;
  c.variant = ConeVariant::Orthant;
  c.d = d;
  c.validate();
  return c;
}

ConeSpec ConeSpec::from_generators(Eigen::MatrixXd generators) {
  ConeSpec c;
  c.variant = ConeVariant::PolyhedralGenerators;
  c.d = static_cast<int>(generators.rows());
  c.generators = std::move(generators);
  c.validate();
  return c;
}

ConeSpec ConeSpec::from_inequalities(Eigen::MatrixXd normals) {
  ConeSpec c;
  c.variant = ConeVariant::PolyhedralInequalities;
  c.d = static_cast<int>(normals.cols());
  c.normals = std::move(normals);
  c.validate();
  return c;
}

ConeSpec ConeSpec::descent(Penalty penalty, Eigen::VectorXd anchor) {
  ConeSpec c;
  c.variant = ConeVariant::DescentCone;
  c.d = static_cast<int>(anchor.size());
  c.penalty = penalty;
  c.anchor = std::move(anchor);
  c.validate();
  return c;
}

void ConeSpec::validate() const {
  if (d < 1) throw DimensionError("ConeSpec: dimension must be at least 1");
  switch (variant) {
    case ConeVariant::Trivial:
    case ConeVariant::Orthant:
      return;
    case ConeVariant::Subspace: {
      if (basis.rows() != d) throw DimensionError("ConeSpec: basis rows != d");
      if (basis.cols() < 1 || basis.cols() > d)
        throw DimensionError("ConeSpec: basis must have between 1 and d columns");
      const Eigen::MatrixXd gram = basis.transpose() * basis;
      const double defect =
          (gram - Eigen::MatrixXd::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff();
      if (defect > kOrthonormalTol)
        throw InvalidInputError("ConeSpec: subspace basis not orthonormal, defect " +
                                std::to_string(defect));
      return;
    }
    case ConeVariant::PolyhedralGenerators: {
      if (generators.rows() != d) throw DimensionError("ConeSpec: generator rows != d");
      if (generators.cols() < 1) throw DimensionError("ConeSpec: no generator columns");
      for (Eigen::Index j = 0; j < generators.cols(); ++j)
        if (generators.col(j).norm() == 0.0)
          throw InvalidInputError("ConeSpec: zero generator column");
      return;
    }
    case ConeVariant::PolyhedralInequalities: {
      if (normals.cols() != d) throw DimensionError("ConeSpec: normal cols != d");
      if (normals.rows() < 1) throw DimensionError("ConeSpec: no inequality rows");
      for (Eigen::Index i = 0; i < normals.rows(); ++i)
        if (normals.row(i).norm() == 0.0)
          throw InvalidInputError("ConeSpec: zero inequality row");
      return;
    }
    case ConeVariant::DescentCone: {
      if (anchor.size() != d) throw DimensionError("ConeSpec: anchor size != d");
      if (penalty == Penalty::LINF && anchor.cwiseAbs().maxCoeff() > 0.0 &&
          !is_sign_vector(anchor))
        throw UnsupportedConeError(
            "ConeSpec: sup-norm descent cone needs an anchor with equal-magnitude entries");
      return;
    }
  }
  throw InvalidInputError("ConeSpec: unknown variant");
}

ProjectionResult project_cone(const ConeSpec& cone, const Eigen::VectorXd& g, double tol) {
  cone.validate();
  if (g.size() != cone.d) throw DimensionError("project_cone: point size != d");
  if (tol < 0) throw InvalidInputError("project_cone: negative tolerance");
  const double scale = g.norm();
  const double thr = tol * scale;

  switch (cone.variant) {
    case ConeVariant::Trivial:
      return {Eigen::VectorXd::Zero(cone.d), 0};
    case ConeVariant::Subspace:
      return {cone.basis * (cone.basis.transpose() * g), static_cast<int>(cone.basis.cols())};
    case ConeVariant::Orthant: {
      Eigen::VectorXd p = g.cwiseMax(0.0);
      int dim = 0;
      for (Eigen::Index i = 0; i < g.size(); ++i)
        if (g[i] > thr) ++dim;
      return {std::move(p), dim};
    }
    case ConeVariant::PolyhedralGenerators: {
      const Eigen::VectorXd lambda = lp::nnls(cone.generators, g);
      Eigen::VectorXd p = cone.generators * lambda;
      std::vector<Eigen::Index> active;
      for (Eigen::Index j = 0; j < lambda.size(); ++j)
        if (lambda[j] > thr) active.push_back(j);
      Eigen::MatrixXd sub(cone.d, static_cast<Eigen::Index>(active.size()));
      for (std::size_t c = 0; c < active.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = cone.generators.col(active[c]);
      return {std::move(p), matrix_rank(sub)};
    }
    case ConeVariant::PolyhedralInequalities: {
      // Moreau split: remove the projection onto the cone generated by the
      // constraint normals.
      const Eigen::MatrixXd vt = cone.normals.transpose();
      const Eigen::VectorXd mu = lp::nnls(vt, g);
      Eigen::VectorXd p = g - vt * mu;
      std::vector<Eigen::Index> active;
      for (Eigen::Index i = 0; i < cone.normals.rows(); ++i) {
        const double slack = cone.normals.row(i).dot(p);
        if (std::abs(slack) <= std::max(thr * cone.normals.row(i).norm(), 1e-12))
          active.push_back(i);
      }
      Eigen::MatrixXd sub(static_cast<Eigen::Index>(active.size()), cone.d);
      for (std::size_t r = 0; r < active.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = cone.normals.row(active[r]);
      return {std::move(p), cone.d - matrix_rank(sub)};
    }
    case ConeVariant::DescentCone:
      throw UnsupportedConeError("project_cone: descent cones have no direct projection here");
  }
  throw InvalidInputError("project_cone: unknown variant");
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  if (radius < 0) throw InvalidInputError("project_l1_ball: negative radius");
  if (v.lpNorm<1>() <= radius) return v;
  if (radius == 0.0) return Eigen::VectorXd::Zero(v.size());
  // Soft threshold at the level where the shrunken l1 norm hits the radius.
  std::vector<double> mags(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumulative += mags[j];
    const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
    if (j + 1 == mags.size() || mags[j + 1] <= candidate) {
      theta = candidate;
      break;
    }
  }
  Eigen::VectorXd p(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double shrunk = std::abs(v[i]) - theta;
    p[i] = shrunk > 0 ? (v[i] > 0 ? shrunk : -shrunk) : 0.0;
  }
  return p;
}

Eigen::VectorXd project_linf_ball(const Eigen::VectorXd& v, double radius) {
  if (radius < 0) throw InvalidInputError("project_linf_ball: negative radius");
  return v.cwiseMin(radius).cwiseMax(-radius);
}

SimplexProjection project_scaled_simplex(const Eigen::VectorXd& y, double tau) {
  if (tau < 0) throw InvalidInputError("project_scaled_simplex: negative tau");
  if (y.size() == 0) throw DimensionError("project_scaled_simplex: empty input");
  if (tau == 0.0) return {Eigen::VectorXd::Zero(y.size()), y.maxCoeff()};
  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - tau) / static_cast<double>(j + 1);
    if (j + 1 == sorted.size() || sorted[j + 1] <= candidate) {
      theta = candidate;
      break;
    }
  }
  SimplexProjection result;
  result.theta = theta;
  result.point = (y.array() - theta).cwiseMax(0.0).matrix();
  return result;
}

namespace {

void check_subdiff_inputs(Penalty penalty, const Eigen::VectorXd& anchor,
                          const Eigen::VectorXd& g, double tau) {
  if (anchor.size() != g.size()) throw DimensionError("subdiff_distance: size mismatch");
  if (anchor.size() == 0) throw DimensionError("subdiff_distance: empty anchor");
  if (tau < 0) throw InvalidInputError("subdiff_distance: negative tau");
  if (penalty == Penalty::L1 && anchor.cwiseAbs().maxCoeff() == 0.0)
    throw InvalidInputError("subdiff_distance: l1 anchor must be nonzero");
  if (penalty == Penalty::LINF && !is_sign_vector(anchor))
    throw UnsupportedConeError(
        "subdiff_distance: sup-norm anchor must have equal nonzero magnitudes");
}

// Sign-aligned data for the sup-norm path: distance to tau * subdifferential
// equals distance from s.*g to the scaled simplex.
Eigen::VectorXd align_signs(const Eigen::VectorXd& anchor, const Eigen::VectorXd& g) {
  Eigen::VectorXd y(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) y[i] = anchor[i] >= 0 ? g[i] : -g[i];
  return y;
}

}  // namespace

double subdiff_distance(Penalty penalty, const Eigen::VectorXd& anchor,
                        const Eigen::VectorXd& g, double tau) {
  check_subdiff_inputs(penalty, anchor, g, tau);
  if (tau == 0.0) return g.squaredNorm();
  if (penalty == Penalty::L1) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (anchor[i] != 0.0) {
        const double diff = g[i] - tau * (anchor[i] > 0 ? 1.0 : -1.0);
        total += diff * diff;
      } else {
        const double excess = std::abs(g[i]) - tau;
        if (excess > 0) total += excess * excess;
      }
    }
    return total;
  }
  const Eigen::VectorXd y = align_signs(anchor, g);
  const SimplexProjection proj = project_scaled_simplex(y, tau);
  return (y - proj.point).squaredNorm();
}

double subdiff_distance_derivative(Penalty penalty, const Eigen::VectorXd& anchor,
                                   const Eigen::VectorXd& g, double tau) {
  check_subdiff_inputs(penalty, anchor, g, tau);
  if (penalty == Penalty::L1) {
    double deriv = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (anchor[i] != 0.0) {
        deriv += 2.0 * (tau - (anchor[i] > 0 ? g[i] : -g[i]));
      } else {
        const double excess = std::abs(g[i]) - tau;
        if (excess > 0) deriv -= 2.0 * excess;
      }
    }
    return deriv;
  }
  const Eigen::VectorXd y = align_signs(anchor, g);
  if (tau == 0.0) return -2.0 * std::max(y.maxCoeff(), 0.0);
  return -2.0 * project_scaled_simplex(y, tau).theta;
}

namespace {

// Per-sample tau-minimized subdifferential distance by bisection on the
// monotone derivative. The l1 minimizer is bounded by max|g|; the sup-norm
// minimizer can reach sum of positive parts, so the bracket doubles until the
// derivative turns nonnegative.
double min_subdiff_distance(Penalty penalty, const Eigen::VectorXd& anchor,
                            const Eigen::VectorXd& g) {
  if (subdiff_distance_derivative(penalty, anchor, g, 0.0) >= 0.0)
    return g.squaredNorm();
  double hi = g.cwiseAbs().maxCoeff() + 1.0;
  int doublings = 0;
  while (subdiff_distance_derivative(penalty, anchor, g, hi) < 0.0) {
    hi *= 2.0;
    if (++doublings > 60)
      throw NumericalError("min_subdiff_distance: derivative bracket did not close");
  }
  double lo = 0.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-13 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (subdiff_distance_derivative(penalty, anchor, g, mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return subdiff_distance(penalty, anchor, g, 0.5 * (lo + hi));
}

}  // namespace

std::string sdim_method_name(SdimMethod m) {
  switch (m) {
    case SdimMethod::MonteCarlo: return "MONTE_CARLO";
    case SdimMethod::L1Formula: return "L1_FORMULA";
    case SdimMethod::ClosedForm: return "CLOSED_FORM";
  }
  throw InvalidInputError("unknown sdim method");
}

std::optional<double> sdim_closed_form(const ConeSpec& cone) {
  switch (cone.variant) {
    case ConeVariant::Trivial:
      return 0.0;
    case ConeVariant::Subspace:
      return static_cast<double>(cone.basis.cols());
    case ConeVariant::Orthant:
      return 0.5 * cone.d;
    case ConeVariant::DescentCone:
      if (cone.anchor.cwiseAbs().maxCoeff() == 0.0) return 0.0;
      if (cone.penalty == Penalty::LINF) return 0.5 * cone.d;
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

SdimEstimate sdim_mc(const ConeSpec& cone, long trials, const rngkit::SeedStream& stream,
                     int threads) {
  cone.validate();
  if (trials < 100) throw InvalidInputError("sdim_mc: needs at least 100 trials");

  SdimEstimate estimate;
  estimate.trials = trials;

  // Degenerate cases where the estimator would be a constant.
  const bool zero_anchor = cone.variant == ConeVariant::DescentCone &&
                           cone.anchor.cwiseAbs().maxCoeff() == 0.0;
  const bool full_subspace =
      cone.variant == ConeVariant::Subspace && cone.basis.cols() == cone.d;
  if (cone.variant == ConeVariant::Trivial || zero_anchor || full_subspace) {
    estimate.value = cone.variant == ConeVariant::Subspace ? cone.d : 0.0;
    estimate.std_error = 0.0;
    estimate.method = SdimMethod::ClosedForm;
    return estimate;
  }

  auto sample = [&](std::int64_t i) {
    const Eigen::VectorXd g =
        rngkit::gaussian_vector(cone.d, stream.child(static_cast<std::uint64_t>(i)));
    if (cone.variant == ConeVariant::DescentCone)
      return min_subdiff_distance(cone.penalty, cone.anchor, g);
    return project_cone(cone, g).point.squaredNorm();
  };
  const auto acc = parallel::chunked_accumulate<parallel::MeanVar>(
      trials, threads,
      [&](parallel::MeanVar& mv, std::int64_t i) { mv.add(sample(i)); },
      [](parallel::MeanVar& into, const parallel::MeanVar& from) { into.merge(from); });

  estimate.value = acc.mean();
  estimate.std_error = acc.std_error();
  estimate.method = SdimMethod::MonteCarlo;
  return estimate;
}

double clipped_square_moment(double tau) {
  if (tau < 0) throw InvalidInputError("clipped_square_moment: negative tau");
  return 2.0 * ((1.0 + tau * tau) * gauss_tail(tau) - tau * gauss_pdf(tau));
}

namespace {

double l1_bound_derivative(double k, double d, double tau) {
  return 2.0 * k * tau + 4.0 * (d - k) * (tau * gauss_tail(tau) - gauss_pdf(tau));
}

}  // namespace

double sdim_l1_bound(double k, double d) {
  if (d < 1 || k < 0 || k > d) throw InvalidInputError("sdim_l1_bound: need 0 <= k <= d");
  if (k == 0) return 0.0;
  if (k == d) return d;
  // The objective k(1+tau^2) + (d-k)E[(|g|-tau)_+^2] is convex with a
  // negative derivative at 0; bisect the derivative's sign change.
  double lo = 0.0, hi = 1.0;
  while (l1_bound_derivative(k, d, hi) < 0.0) hi *= 2.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (l1_bound_derivative(k, d, mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double tau = 0.5 * (lo + hi);
  return k * (1.0 + tau * tau) + (d - k) * clipped_square_moment(tau);
}

SdimEstimate sdim_l1_formula(long k, int d) {
  if (d < 1) throw DimensionError("sdim_l1_formula: d must be positive");
  if (k < 0 || k > d) throw InvalidInputError("sdim_l1_formula: need 0 <= k <= d");
  SdimEstimate estimate;
  estimate.value = sdim_l1_bound(static_cast<double>(k), static_cast<double>(d));
  estimate.std_error = 0.0;
  estimate.method = SdimMethod::L1Formula;
  estimate.trials = 0;
  return estimate;
}

ConeSpec polar(const ConeSpec& cone) {
  cone.validate();
  switch (cone.variant) {
    case ConeVariant::Trivial:
      return ConeSpec::full_space(cone.d);
    case ConeVariant::Orthant:
      return ConeSpec::from_generators(-Eigen::MatrixXd::Identity(cone.d, cone.d));
    case ConeVariant::Subspace: {
      const int r = static_cast<int>(cone.basis.cols());
      if (r == cone.d) return ConeSpec::trivial(cone.d);
      // Orthogonal complement from the full Q factor of the basis.
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(cone.basis);
      const Eigen::MatrixXd q = qr.householderQ();
      return ConeSpec::subspace(q.rightCols(cone.d - r));
    }
    case ConeVariant::PolyhedralGenerators:
      return ConeSpec::from_inequalities(cone.generators.transpose());
    case ConeVariant::PolyhedralInequalities:
      return ConeSpec::from_generators(cone.normals.transpose());
    case ConeVariant::DescentCone:
      throw UnsupportedConeError("polar: descent cones are not supported");
  }
  throw InvalidInputError("polar: unknown variant");
}

}  // namespace demix::cones
