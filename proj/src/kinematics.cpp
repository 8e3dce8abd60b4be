#include "demix/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "demix/errors.hpp"
#include "demix/lp.hpp"
#include "demix/parallel.hpp"

namespace demix::kinematics {

double IntrinsicVolumeProfile::mean() const {
  double total = 0.0;
  for (int k = 0; k <= dim(); ++k) total += k * values[k];
  return total;
}

double IntrinsicVolumeProfile::tail(int k) const {
  if (k < 0 || k > dim() + 1) throw InvalidInputError("profile tail: index out of range");
  double total = 0.0;
  for (int j = k; j <= dim(); ++j) total += values[j];
  return total;
}

double IntrinsicVolumeProfile::half_tail(int k) const {
  if (k < 0 || k > dim() + 1) throw InvalidInputError("profile half_tail: index out of range");
  double total = 0.0;
  for (int j = k; j <= dim(); j += 2) total += values[j];
  return total;
}

double IntrinsicVolumeProfile::functional_variance(const Eigen::VectorXd& w) const {
  if (w.size() != values.size())
    throw DimensionError("profile functional_variance: weight size mismatch");
  if (exact || trials == 0) return 0.0;
  // Multinomial covariance: Var(w.v) = (E[w^2] - (E[w])^2) / trials over the
  // face-dimension distribution.
  double first = 0.0, second = 0.0;
  for (int k = 0; k <= dim(); ++k) {
    first += w[k] * values[k];
    second += w[k] * w[k] * values[k];
  }
  const double var = (second - first * first) / static_cast<double>(trials);
  return var > 0.0 ? var : 0.0;
}

bool IntrinsicVolumeProfile::looks_like_subspace() const {
  int support = 0;
  for (int k = 0; k <= dim(); ++k)
    if (values[k] != 0.0) ++support;
  return support <= 1;
}

IntrinsicVolumeProfile exact_orthant_profile(int d) {
  if (d < 1) throw DimensionError("exact_orthant_profile: d must be positive");
  IntrinsicVolumeProfile profile;
  profile.values = Eigen::VectorXd::Zero(d + 1);
  // Binomial(d, 1/2): each coordinate of the Gaussian lands positive
  // independently.
  double coeff = std::pow(0.5, d);
  for (int k = 0; k <= d; ++k) {
    profile.values[k] = coeff;
    coeff *= static_cast<double>(d - k) / static_cast<double>(k + 1);
  }
  profile.exact = true;
  return profile;
}

IntrinsicVolumeProfile exact_subspace_profile(int d, int r) {
  if (d < 1 || r < 0 || r > d) throw DimensionError("exact_subspace_profile: bad dims");
  IntrinsicVolumeProfile profile;
  profile.values = Eigen::VectorXd::Zero(d + 1);
  profile.values[r] = 1.0;
  profile.exact = true;
  return profile;
}

IntrinsicVolumeProfile intrinsic_volumes_mc(const cones::ConeSpec& cone, long trials,
                                            const rngkit::SeedStream& stream, int threads) {
  cone.validate();
  if (cone.d > 20) throw InvalidInputError("intrinsic_volumes_mc: d must be at most 20");
  if (trials < 10000) throw InvalidInputError("intrinsic_volumes_mc: needs at least 10^4 trials");
  if (cone.variant == cones::ConeVariant::DescentCone)
    throw UnsupportedConeError("intrinsic_volumes_mc: descent cones are not supported");

  struct Hist {
    std::vector<long> counts;
  };
  const int d = cone.d;
  const auto hist = parallel::chunked_accumulate<Hist>(
      trials, threads,
      [&](Hist& h, std::int64_t i) {
        if (h.counts.empty()) h.counts.assign(static_cast<std::size_t>(d) + 1, 0);
        const Eigen::VectorXd g =
            rngkit::gaussian_vector(d, stream.child(static_cast<std::uint64_t>(i)));
        const int face = cones::project_cone(cone, g).face_dim;
        ++h.counts[static_cast<std::size_t>(face)];
      },
      [](Hist& into, const Hist& from) {
        if (into.counts.empty()) into.counts.assign(from.counts.size(), 0);
        for (std::size_t k = 0; k < from.counts.size(); ++k) into.counts[k] += from.counts[k];
      });

  IntrinsicVolumeProfile profile;
  profile.counts = hist.counts.empty()
                       ? std::vector<long>(static_cast<std::size_t>(d) + 1, 0)
                       : hist.counts;
  profile.trials = trials;
  profile.exact = false;
  profile.values = Eigen::VectorXd::Zero(d + 1);
  for (int k = 0; k <= d; ++k)
    profile.values[k] =
        static_cast<double>(profile.counts[static_cast<std::size_t>(k)]) / static_cast<double>(trials);
  return profile;
}

IntrinsicVolumeProfile intrinsic_volume_profile(const cones::ConeSpec& cone, long trials,
                                                const rngkit::SeedStream& stream, int threads) {
  switch (cone.variant) {
    case cones::ConeVariant::Trivial:
      return exact_subspace_profile(cone.d, 0);
    case cones::ConeVariant::Subspace:
      return exact_subspace_profile(cone.d, static_cast<int>(cone.basis.cols()));
    case cones::ConeVariant::Orthant:
      return exact_orthant_profile(cone.d);
    default:
      return intrinsic_volumes_mc(cone, trials, stream, threads);
  }
}

IntrinsicVolumeProfile profile_product(const IntrinsicVolumeProfile& a,
                                       const IntrinsicVolumeProfile& b) {
  IntrinsicVolumeProfile out;
  out.values = Eigen::VectorXd::Zero(a.values.size() + b.values.size() - 1);
  for (int i = 0; i <= a.dim(); ++i)
    for (int j = 0; j <= b.dim(); ++j) out.values[i + j] += a.values[i] * b.values[j];
  out.exact = a.exact && b.exact;
  out.trials = 0;
  return out;
}

IntrinsicVolumeProfile profile_product(const std::vector<IntrinsicVolumeProfile>& factors) {
  if (factors.empty()) throw InvalidInputError("profile_product: no factors");
  IntrinsicVolumeProfile out = factors[0];
  for (std::size_t i = 1; i < factors.size(); ++i) out = profile_product(out, factors[i]);
  return out;
}

double product_functional_variance(const std::vector<IntrinsicVolumeProfile>& factors,
                                   const Eigen::VectorXd& w) {
  if (factors.empty()) throw InvalidInputError("product_functional_variance: no factors");
  int total_dim = 0;
  for (const auto& f : factors) total_dim += f.dim();
  if (w.size() != total_dim + 1)
    throw DimensionError("product_functional_variance: weight size mismatch");

  // First-order propagation: the gradient of the functional in factor i's
  // values is the weight vector convolved with the product of the other
  // factors.
  double variance = 0.0;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (factors[i].exact || factors[i].trials == 0) continue;
    IntrinsicVolumeProfile rest;
    bool have_rest = false;
    for (std::size_t j = 0; j < factors.size(); ++j) {
      if (j == i) continue;
      rest = have_rest ? profile_product(rest, factors[j]) : factors[j];
      have_rest = true;
    }
    Eigen::VectorXd grad(factors[i].values.size());
    for (int a = 0; a <= factors[i].dim(); ++a) {
      double total = 0.0;
      if (have_rest) {
        for (int b = 0; b <= rest.dim(); ++b) total += w[a + b] * rest.values[b];
      } else {
        total = w[a];
      }
      grad[a] = total;
    }
    variance += factors[i].functional_variance(grad);
  }
  return variance;
}

double p_theta(double theta, double lambda) {
  if (theta < 0 || lambda < 0) throw InvalidInputError("p_theta: negative argument");
  const double denom = theta * theta + lambda / 3.0;
  if (denom == 0.0) return 1.0;
  return std::exp(-(lambda * lambda / 4.0) / denom);
}

double lambda_star(double eta, double sigma) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInputError("lambda_star: eta must be in (0,1)");
  if (sigma < 0) throw InvalidInputError("lambda_star: negative sigma");
  const double level = std::log(1.0 / eta);
  return (4.0 / 3.0) * level + 2.0 * sigma * std::sqrt(level);
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::StableWhp: return "STABLE_WHP";
    case Verdict::FailWhp: return "FAIL_WHP";
    case Verdict::TransitionRegion: return "TRANSITION_REGION";
    case Verdict::DegenerateAlwaysSuccess: return "DEGENERATE_ALWAYS_SUCCESS";
  }
  throw InvalidInputError("unknown verdict");
}

TransitionPrediction predict_transition(const std::vector<cones::SdimEstimate>& deltas,
                                        int d, long m, double eta) {
  if (d < 1) throw DimensionError("predict_transition: d must be positive");
  if (m < 1 || m > d) throw InvalidInputError("predict_transition: need 1 <= m <= d");
  if (deltas.empty()) throw InvalidInputError("predict_transition: no constituents");

  TransitionPrediction pred;
  pred.eta = eta;
  pred.m = m;
  double sigma_sq = 0.0;
  int nonzero = 0;
  for (const auto& est : deltas) {
    if (est.value < 0 || est.value > d + 1e-9)
      throw InvalidInputError("predict_transition: statistical dimension outside [0, d]");
    pred.delta_total += est.value;
    sigma_sq += std::max(0.0, std::min(est.value, d - est.value));
    if (est.value > 0.0) ++nonzero;
  }
  pred.sigma = std::sqrt(sigma_sq);
  pred.lambda_star = lambda_star(eta, pred.sigma);

  if (deltas.size() >= 2 && nonzero <= 1) {
    // Several constituents but at most one active descent cone: the inactive
    // blocks are pinned by their constraints, nothing can collide, and
    // recovery holds for every measurement count. A single-constituent list
    // never takes this branch: there the measurement map itself supplies the
    // second cone and the width verdicts below apply.
    pred.verdict = Verdict::DegenerateAlwaysSuccess;
  } else if (static_cast<double>(m) >= pred.delta_total + pred.lambda_star) {
    pred.verdict = Verdict::StableWhp;
  } else if (static_cast<double>(m) <= pred.delta_total - pred.lambda_star) {
    pred.verdict = Verdict::FailWhp;
  } else {
    pred.verdict = Verdict::TransitionRegion;
  }
  return pred;
}

double crofton_probability_formula(const std::vector<IntrinsicVolumeProfile>& factors) {
  if (factors.size() < 2) throw InvalidInputError("crofton_probability_formula: need >= 2 cones");
  const int d = factors[0].dim();
  bool all_subspace = true;
  for (const auto& f : factors) {
    if (f.dim() != d) throw DimensionError("crofton_probability_formula: mixed dimensions");
    if (!f.looks_like_subspace()) all_subspace = false;
  }
  if (all_subspace)
    throw InvalidInputError(
        "crofton_probability_formula: all factors are subspaces; the event is deterministic, "
        "decide it by comparing the sum of subspace dimensions with (n-1)*d");
  const IntrinsicVolumeProfile product = profile_product(factors);
  const int n = static_cast<int>(factors.size());
  return 2.0 * product.half_tail((n - 1) * d + 1);
}

namespace {

// Inequality representation {x : B x <= 0}; empty B means the full space.
Eigen::MatrixXd inequality_rows(const cones::ConeSpec& cone) {
  switch (cone.variant) {
    case cones::ConeVariant::Orthant:
      return -Eigen::MatrixXd::Identity(cone.d, cone.d);
    case cones::ConeVariant::PolyhedralInequalities:
      return cone.normals;
    case cones::ConeVariant::Trivial: {
      Eigen::MatrixXd b(2 * cone.d, cone.d);
      b << Eigen::MatrixXd::Identity(cone.d, cone.d), -Eigen::MatrixXd::Identity(cone.d, cone.d);
      return b;
    }
    case cones::ConeVariant::Subspace: {
      const int r = static_cast<int>(cone.basis.cols());
      if (r == cone.d) return Eigen::MatrixXd(0, cone.d);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(cone.basis);
      const Eigen::MatrixXd q = qr.householderQ();
      const Eigen::MatrixXd nt = q.rightCols(cone.d - r).transpose();
      Eigen::MatrixXd b(2 * nt.rows(), cone.d);
      b << nt, -nt;
      return b;
    }
    default:
      throw UnsupportedConeError("no inequality representation for this cone variant");
  }
}

// Generator representation (columns), for cones that have a pointed one.
Eigen::MatrixXd generator_columns(const cones::ConeSpec& cone) {
  switch (cone.variant) {
    case cones::ConeVariant::Orthant:
      return Eigen::MatrixXd::Identity(cone.d, cone.d);
    case cones::ConeVariant::PolyhedralGenerators:
      return cone.generators;
    default:
      throw UnsupportedConeError("no generator representation for this cone variant");
  }
}

bool generators_pointed(const Eigen::MatrixXd& v) {
  // Pointed iff no nonzero nonnegative combination vanishes: check the LP
  // {V a = 0, sum a = 1, a >= 0} for infeasibility.
  const int d = static_cast<int>(v.rows());
  const int n = static_cast<int>(v.cols());
  Eigen::MatrixXd e(d + 1, n);
  e.topRows(d) = v;
  e.bottomRows(1).setOnes();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(d + 1);
  f[d] = 1.0;
  return !lp::simplex_feasible(e, f).feasible;
}

}  // namespace

CroftonEstimate crofton_probability_mc(const std::vector<cones::ConeSpec>& cone_list,
                                       long trials, const rngkit::SeedStream& stream,
                                       int threads) {
  if (cone_list.size() < 2) throw InvalidInputError("crofton_probability_mc: need >= 2 cones");
  const int d = cone_list[0].d;
  for (const auto& c : cone_list) {
    c.validate();
    if (c.d != d) throw DimensionError("crofton_probability_mc: mixed dimensions");
    if (c.variant == cones::ConeVariant::DescentCone)
      throw UnsupportedConeError("crofton_probability_mc: descent cones are not supported");
  }
  if (trials < 1) throw InvalidInputError("crofton_probability_mc: needs trials >= 1");

  // A trivial factor forces the intersection to the origin.
  for (const auto& c : cone_list)
    if (c.variant == cones::ConeVariant::Trivial) return {0.0, 0.0, trials};

  // The ray is normalized on a pointed generator-form factor; find one and
  // classify the rest.
  const int n = static_cast<int>(cone_list.size());
  int host = -1;
  for (int i = 0; i < n; ++i) {
    const auto v = cone_list[i].variant;
    if (v == cones::ConeVariant::Orthant || v == cones::ConeVariant::PolyhedralGenerators) {
      if (!generators_pointed(generator_columns(cone_list[i])))
        throw UnsupportedConeError(
            "crofton_probability_mc: generator cone is not pointed; pass the inequality form");
      if (host < 0) host = i;
    }
  }
  if (host < 0)
    throw UnsupportedConeError(
        "crofton_probability_mc: needs at least one pointed generator-form cone to normalize "
        "the shared ray (all-subspace intersections are decided by dimension counting)");

  // Column layout: x+ | x- | per-cone coefficient blocks. Equality rows tie
  // x to each factor's representation; inequality factors get slack columns.
  auto trial_feasible = [&](const rngkit::SeedStream& trial_stream) {
    const rngkit::RotationSet rotations = rngkit::sample_rotations(d, n, trial_stream);
    long rows = 1;  // normalization row
    long cols = 2L * d;
    std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto& c = cone_list[i];
      const Eigen::MatrixXd& q = rotations.rotations[static_cast<std::size_t>(i)];
      switch (c.variant) {
        case cones::ConeVariant::Orthant:
        case cones::ConeVariant::PolyhedralGenerators:
          blocks[static_cast<std::size_t>(i)] = q * generator_columns(c);
          rows += d;
          cols += blocks[static_cast<std::size_t>(i)].cols();
          break;
        case cones::ConeVariant::Subspace:
          blocks[static_cast<std::size_t>(i)] = q * c.basis;
          rows += d;
          cols += 2 * blocks[static_cast<std::size_t>(i)].cols();
          break;
        case cones::ConeVariant::PolyhedralInequalities:
          blocks[static_cast<std::size_t>(i)] = c.normals * q.transpose();
          rows += blocks[static_cast<std::size_t>(i)].rows();
          cols += blocks[static_cast<std::size_t>(i)].rows();
          break;
        default:
          throw UnsupportedConeError("crofton_probability_mc: unsupported cone variant");
      }
    }
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(rows);
    long row = 0;
    long col = 2L * d;
    for (int i = 0; i < n; ++i) {
      const auto& c = cone_list[i];
      const Eigen::MatrixXd& blk = blocks[static_cast<std::size_t>(i)];
      if (c.variant == cones::ConeVariant::PolyhedralInequalities) {
        // B Q^T x + s = 0.
        e.block(row, 0, blk.rows(), d) = blk;
        e.block(row, d, blk.rows(), d) = -blk;
        e.block(row, col, blk.rows(), blk.rows()) =
            Eigen::MatrixXd::Identity(blk.rows(), blk.rows());
        row += blk.rows();
        col += blk.rows();
      } else if (c.variant == cones::ConeVariant::Subspace) {
        // x - Q W (t+ - t-) = 0.
        e.block(row, 0, d, d) = Eigen::MatrixXd::Identity(d, d);
        e.block(row, d, d, d) = -Eigen::MatrixXd::Identity(d, d);
        e.block(row, col, d, blk.cols()) = -blk;
        e.block(row, col + blk.cols(), d, blk.cols()) = blk;
        row += d;
        col += 2 * blk.cols();
      } else {
        // x - Q V a = 0, with the host block carrying sum(a) = 1.
        e.block(row, 0, d, d) = Eigen::MatrixXd::Identity(d, d);
        e.block(row, d, d, d) = -Eigen::MatrixXd::Identity(d, d);
        e.block(row, col, d, blk.cols()) = -blk;
        if (i == host) e.block(rows - 1, col, 1, blk.cols()).setOnes();
        row += d;
        col += blk.cols();
      }
    }
    f[rows - 1] = 1.0;
    return lp::simplex_feasible(e, f).feasible;
  };

  struct Tally {
    long hits = 0;
  };
  const auto tally = parallel::chunked_accumulate<Tally>(
      trials, threads,
      [&](Tally& t, std::int64_t i) {
        if (trial_feasible(stream.child(static_cast<std::uint64_t>(i)))) ++t.hits;
      },
      [](Tally& into, const Tally& from) { into.hits += from.hits; });

  CroftonEstimate est;
  est.trials = trials;
  est.probability = static_cast<double>(tally.hits) / static_cast<double>(trials);
  est.std_error =
      std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(trials));
  return est;
}

KinematicCheck kinematic_expectation_check(const cones::ConeSpec& C, const cones::ConeSpec& D,
                                           int k, long rotation_trials, long inner_trials,
                                           const rngkit::SeedStream& stream, int threads) {
  C.validate();
  D.validate();
  if (C.d != D.d) throw DimensionError("kinematic_expectation_check: mixed dimensions");
  const int d = C.d;
  if (d > 6) throw InvalidInputError("kinematic_expectation_check: d must be at most 6");
  if (k < 1 || k > d) throw InvalidInputError("kinematic_expectation_check: need 1 <= k <= d");
  if (rotation_trials < 1 || inner_trials < 1)
    throw InvalidInputError("kinematic_expectation_check: needs positive trial counts");

  const Eigen::MatrixXd bc = inequality_rows(C);
  const Eigen::MatrixXd bd = inequality_rows(D);

  // lhs: rotate D, intersect in inequality form, estimate the k-th intrinsic
  // volume of the intersection; average over rotations with a clustered
  // standard error (inner draws share a rotation).
  std::vector<double> per_rotation(static_cast<std::size_t>(rotation_trials), 0.0);
  parallel::parallel_for(rotation_trials, threads, [&](std::int64_t r) {
    const auto rot_stream = stream.child(static_cast<std::uint64_t>(r));
    const Eigen::MatrixXd q = rngkit::haar_orthogonal(d, rot_stream.child(0));
    Eigen::MatrixXd stacked(bc.rows() + bd.rows(), d);
    if (bc.rows() > 0) stacked.topRows(bc.rows()) = bc;
    if (bd.rows() > 0) stacked.bottomRows(bd.rows()) = bd * q.transpose();
    long hits = 0;
    if (stacked.rows() == 0) {
      // Both factors are the full space; the intersection is too.
      hits = (k == d) ? inner_trials : 0;
    } else {
      const cones::ConeSpec inter = cones::ConeSpec::from_inequalities(stacked);
      const auto inner_stream = rot_stream.child(1);
      for (long i = 0; i < inner_trials; ++i) {
        const Eigen::VectorXd g =
            rngkit::gaussian_vector(d, inner_stream.child(static_cast<std::uint64_t>(i)));
        if (cones::project_cone(inter, g).face_dim == k) ++hits;
      }
    }
    per_rotation[static_cast<std::size_t>(r)] =
        static_cast<double>(hits) / static_cast<double>(inner_trials);
  });

  KinematicCheck check;
  parallel::MeanVar mv;
  for (double v : per_rotation) mv.add(v);
  check.lhs = mv.mean();
  check.lhs_std_error = mv.std_error();

  // rhs: entry d+k of the product profile. Exact profiles where available.
  const auto profile_stream = stream.child(0x9e3779b9);
  std::vector<IntrinsicVolumeProfile> factors = {
      intrinsic_volume_profile(C, std::max(inner_trials * rotation_trials, 10000L),
                               profile_stream.child(0), threads),
      intrinsic_volume_profile(D, std::max(inner_trials * rotation_trials, 10000L),
                               profile_stream.child(1), threads)};
  const IntrinsicVolumeProfile product = profile_product(factors);
  check.rhs = product.values[d + k];
  Eigen::VectorXd w = Eigen::VectorXd::Zero(product.values.size());
  w[d + k] = 1.0;
  check.rhs_std_error = std::sqrt(product_functional_variance(factors, w));
  return check;
}

TailConcentration tail_concentration_check(const std::vector<IntrinsicVolumeProfile>& factors,
                                           int k) {
  if (factors.empty()) throw InvalidInputError("tail_concentration_check: no factors");
  TailConcentration result;
  double theta_sq = 0.0;
  int total_dim = 0;
  for (const auto& f : factors) {
    const double delta = f.mean();
    result.omega += delta;
    theta_sq += std::max(0.0, std::min(delta, f.dim() - delta));
    total_dim += f.dim();
  }
  if (k <= result.omega || k > total_dim)
    throw InvalidInputError("tail_concentration_check: need omega < k <= total dimension");
  result.theta = std::sqrt(theta_sq);
  result.bound = p_theta(result.theta, static_cast<double>(k) - result.omega);

  const IntrinsicVolumeProfile product = profile_product(factors);
  result.tail = product.tail(k);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(product.values.size());
  for (int j = k; j <= total_dim; ++j) w[j] = 1.0;
  result.tail_std_error = std::sqrt(product_functional_variance(factors, w));
  return result;
}

}  // namespace demix::kinematics
