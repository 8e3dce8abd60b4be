#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "demix/cones.hpp"
#include "demix/rngkit.hpp"

namespace demix::kinematics {

// Face-dimension distribution of the Gaussian projection onto a cone in R^d:
// values[k] estimates the probability that the projection lands in the
// relative interior of a k-dimensional face. values has d+1 entries and sums
// to one; the mean of the distribution is the statistical dimension.
struct IntrinsicVolumeProfile {
  Eigen::VectorXd values;
  std::vector<long> counts;  // raw face-dimension counts; empty when exact
  long trials = 0;           // 0 when exact
  bool exact = false;

  int dim() const { return static_cast<int>(values.size()) - 1; }
  double mean() const;
  // Upper tail sum_{j >= k} values[j]; 0 <= k <= dim()+1.
  double tail(int k) const;
  // Alternating upper tail values[k] + values[k+2] + ...
  double half_tail(int k) const;
  // Sampling variance of sum_k w[k]*values[k] under multinomial noise.
  double functional_variance(const Eigen::VectorXd& w) const;
  bool looks_like_subspace() const;  // all mass on a single face dimension
};

IntrinsicVolumeProfile exact_orthant_profile(int d);
IntrinsicVolumeProfile exact_subspace_profile(int d, int r);

// Monte Carlo estimation by projecting Gaussian samples and histogramming
// face dimensions. Requires d <= 20 and trials >= 10^4.
IntrinsicVolumeProfile intrinsic_volumes_mc(const cones::ConeSpec& cone, long trials,
                                            const rngkit::SeedStream& stream,
                                            int threads = 1);

// Exact profile when the variant has one (trivial, subspace, orthant),
// Monte Carlo otherwise.
IntrinsicVolumeProfile intrinsic_volume_profile(const cones::ConeSpec& cone, long trials,
                                                const rngkit::SeedStream& stream,
                                                int threads = 1);

// Profile of a direct product of cones: convolution of the factor profiles.
IntrinsicVolumeProfile profile_product(const IntrinsicVolumeProfile& a,
                                       const IntrinsicVolumeProfile& b);
IntrinsicVolumeProfile profile_product(const std::vector<IntrinsicVolumeProfile>& factors);

// Sampling variance of sum_k w[k] * (product profile)[k], propagating each
// factor's multinomial noise to first order.
double product_functional_variance(const std::vector<IntrinsicVolumeProfile>& factors,
                                   const Eigen::VectorXd& w);

// Concentration bound exp(-(lambda^2/4)/(theta^2 + lambda/3)) for upper
// deviations of size lambda around a profile mean.
double p_theta(double theta, double lambda);

// Transition width: (4/3)ln(1/eta) + 2*sigma*sqrt(ln(1/eta)). Deviating this
// far from the total statistical dimension pushes the failure probability of
// the corresponding phase below eta.
double lambda_star(double eta, double sigma);

enum class Verdict { StableWhp, FailWhp, TransitionRegion, DegenerateAlwaysSuccess };
std::string verdict_name(Verdict v);

struct TransitionPrediction {
  double delta_total = 0.0;
  double sigma = 0.0;
  double lambda_star = 0.0;
  double eta = 0.0;
  long m = 0;
  Verdict verdict = Verdict::TransitionRegion;
};

// Verdict for m measurements against the total statistical dimension of the
// constituent descent cones in R^d. All-but-one-zero dimensions make every
// measurement count succeed, which preempts the width-based verdicts.
TransitionPrediction predict_transition(const std::vector<cones::SdimEstimate>& deltas,
                                        int d, long m, double eta);

// Probability that randomly rotated cones share a ray, evaluated from the
// product profile: twice the half tail at index (n-1)d + 1. Requires at
// least one non-subspace factor; for subspaces alone the event is decided
// exactly by dimension counting.
double crofton_probability_formula(const std::vector<IntrinsicVolumeProfile>& factors);

struct CroftonEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  long trials = 0;
};

// Monte Carlo version: per trial, draw independent rotations and decide
// shared-ray feasibility by LP. Needs at least one pointed generator-form
// cone (orthants count) to normalize the ray; subspace and inequality-form
// factors are supported alongside it.
CroftonEstimate crofton_probability_mc(const std::vector<cones::ConeSpec>& cones,
                                       long trials, const rngkit::SeedStream& stream,
                                       int threads = 1);

struct KinematicCheck {
  double lhs = 0.0;       // E[v_k(C intersect QD)] over random rotations Q
  double lhs_std_error = 0.0;
  double rhs = 0.0;       // v_{d+k} of the product profile
  double rhs_std_error = 0.0;
};

// Two-sided check of the rotation-average identity for intrinsic volumes.
// Both cones must have inequality representations (orthant, subspace,
// trivial, inequality form). Requires d <= 6 and k >= 1.
KinematicCheck kinematic_expectation_check(const cones::ConeSpec& C,
                                           const cones::ConeSpec& D, int k,
                                           long rotation_trials, long inner_trials,
                                           const rngkit::SeedStream& stream,
                                           int threads = 1);

struct TailConcentration {
  double bound = 0.0;   // p_theta evaluated at the tail offset
  double tail = 0.0;    // upper tail of the product profile at k
  double tail_std_error = 0.0;
  double omega = 0.0;   // sum of factor means
  double theta = 0.0;
};

// Compares the product-profile tail at integer index k >= omega against the
// concentration bound with theta^2 = sum_i min(delta_i, d_i - delta_i).
TailConcentration tail_concentration_check(const std::vector<IntrinsicVolumeProfile>& factors,
                                           int k);

}  // namespace demix::kinematics
