#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "demix/cones.hpp"
#include "demix/errors.hpp"
#include "demix/kinematics.hpp"
#include "demix/rngkit.hpp"
#include "doctest.h"

using namespace demix::kinematics;
using demix::cones::ConeSpec;
using demix::cones::Penalty;
using demix::cones::SdimEstimate;
using demix::cones::SdimMethod;
using demix::rngkit::SeedStream;

namespace {

double binomial(int n, int k) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) v = v * (n - i) / (i + 1);
  return v;
}

IntrinsicVolumeProfile make_exact(const std::vector<double>& values) {
  IntrinsicVolumeProfile p;
  p.values = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                               static_cast<long>(values.size()));
  p.exact = true;
  return p;
}

SdimEstimate closed(double value) {
  SdimEstimate e;
  e.value = value;
  e.std_error = 0.0;
  e.method = SdimMethod::ClosedForm;
  return e;
}

}  // namespace

TEST_CASE("exact orthant profile is binomial with the right summaries") {
  for (const int d : {1, 2, 5, 10}) {
    const auto p = exact_orthant_profile(d);
    REQUIRE(p.dim() == d);
    CHECK(p.exact);
    CHECK(p.trials == 0);
    CHECK(p.counts.empty());
    const double scale = std::pow(2.0, -d);
    for (int k = 0; k <= d; ++k)
      CHECK(p.values[k] == doctest::Approx(binomial(d, k) * scale).epsilon(1e-14));
    CHECK(p.values.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.mean() == doctest::Approx(d / 2.0).epsilon(1e-13));
    // Normalization of the half tails: a cone that is not a subspace splits
    // its boundary mass evenly, so twice the odd-index sum is one.
    CHECK(2.0 * p.half_tail(1) == doctest::Approx(1.0).epsilon(1e-13));
    // Interlacing of half tails around half the tail.
    for (int k = 0; k <= d; ++k) {
      CHECK(p.half_tail(k) >= p.tail(k) / 2.0 - 1e-13);
      CHECK(p.tail(k) / 2.0 >= p.half_tail(k + 1) - 1e-13);
    }
    // Tail duality against the polar: the binomial profile is symmetric.
    for (int k = 1; k <= d; ++k)
      CHECK(p.tail(k) == doctest::Approx(1.0 - p.tail(d - k + 1)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(exact_orthant_profile(0), demix::DimensionError);
}

TEST_CASE("frozen orthant tail values") {
  const auto p = exact_orthant_profile(10);
  // t_9 = (C(10,9) + C(10,10)) / 2^10 = 11 / 1024.
  CHECK(p.tail(9) == doctest::Approx(11.0 / 1024.0).epsilon(1e-14));
  CHECK(p.tail(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.tail(11) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(p.tail(12), demix::InvalidInputError);
  CHECK_THROWS_AS(p.half_tail(-1), demix::InvalidInputError);
}

TEST_CASE("exact subspace profile is one-hot with parity half tails") {
  const auto p = exact_subspace_profile(6, 4);
  REQUIRE(p.dim() == 6);
  CHECK(p.values[4] == doctest::Approx(1.0));
  CHECK(p.values.sum() == doctest::Approx(1.0));
  CHECK(p.mean() == doctest::Approx(4.0));
  CHECK(p.looks_like_subspace());
  // Even-dimensional subspace: no odd-index mass at all.
  CHECK(2.0 * p.half_tail(1) == doctest::Approx(0.0));
  const auto q = exact_subspace_profile(6, 3);
  CHECK(2.0 * q.half_tail(1) == doctest::Approx(2.0));
  CHECK_FALSE(exact_orthant_profile(3).looks_like_subspace());
  CHECK_THROWS_AS(exact_subspace_profile(3, 4), demix::DimensionError);
}

TEST_CASE("profile products convolve and shift") {
  // Ray and halfspace in the plane, by hand.
  const auto ray = make_exact({0.5, 0.5, 0.0});
  const auto half = make_exact({0.0, 0.5, 0.5});
  const auto prod = profile_product(ray, half);
  REQUIRE(prod.dim() == 4);
  CHECK(prod.values[0] == doctest::Approx(0.0));
  CHECK(prod.values[1] == doctest::Approx(0.25));
  CHECK(prod.values[2] == doctest::Approx(0.5));
  CHECK(prod.values[3] == doctest::Approx(0.25));
  CHECK(prod.values[4] == doctest::Approx(0.0));
  CHECK(prod.exact);

  // Convolving with a one-hot subspace profile shifts indices.
  const auto orthant = exact_orthant_profile(4);
  const auto shifted = profile_product(orthant, exact_subspace_profile(5, 2));
  REQUIRE(shifted.dim() == 9);
  for (int k = 0; k <= 4; ++k)
    CHECK(shifted.values[k + 2] == doctest::Approx(orthant.values[k]).epsilon(1e-13));

  // Two orthant factors give the doubled binomial.
  const auto two = profile_product({exact_orthant_profile(10), exact_orthant_profile(10)});
  REQUIRE(two.dim() == 20);
  const double scale = std::pow(2.0, -20);
  for (int k = 0; k <= 20; ++k)
    CHECK(two.values[k] == doctest::Approx(binomial(20, k) * scale).epsilon(1e-12));
  CHECK(two.tail(14) == doctest::Approx(60460.0 / 1048576.0).epsilon(1e-12));

  CHECK_THROWS_AS(profile_product({}), demix::InvalidInputError);
}

TEST_CASE("concentration bound and transition width frozen values") {
  CHECK(p_theta(0.0, 4.0) == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
  CHECK(p_theta(10.0, 30.0) == doctest::Approx(std::exp(-225.0 / 110.0)).epsilon(1e-12));
  CHECK(lambda_star(std::exp(-1.0), 3.0) == doctest::Approx(22.0 / 3.0).epsilon(1e-12));
  CHECK(lambda_star(0.01, 10.0) == doctest::Approx(49.059547).epsilon(1e-6));

  // The width is calibrated to the bound: p_sigma(lambda_star) <= eta with
  // equality exactly at sigma = 0.
  for (const double eta : {0.5, 0.1, 0.01}) {
    for (const double sigma : {0.0, 1.0, 10.0, 100.0}) {
      const double width = lambda_star(eta, sigma);
      const double p = p_theta(sigma, width);
      CHECK(p <= eta * (1.0 + 1e-12));
      if (sigma == 0.0) CHECK(p == doctest::Approx(eta).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(lambda_star(0.0, 1.0), demix::InvalidInputError);
  CHECK_THROWS_AS(lambda_star(1.0, 1.0), demix::InvalidInputError);
  CHECK_THROWS_AS(p_theta(-1.0, 1.0), demix::InvalidInputError);
}

TEST_CASE("transition verdicts on pinned cases") {
  // Single sign constituent at full sampling: stable with the frozen width.
  const auto stable = predict_transition({closed(100.0)}, 200, 200, 0.01);
  CHECK(stable.delta_total == doctest::Approx(100.0));
  CHECK(stable.sigma == doctest::Approx(10.0));
  CHECK(stable.lambda_star == doctest::Approx(49.059547).epsilon(1e-6));
  CHECK(stable.verdict == Verdict::StableWhp);
  CHECK(verdict_name(stable.verdict) == "STABLE_WHP");

  // Two constituents, d = 100, eta = 0.1: width about 28.46 around 70.
  const std::vector<SdimEstimate> pair = {closed(30.0), closed(40.0)};
  CHECK(predict_transition(pair, 100, 99, 0.1).verdict == Verdict::StableWhp);
  CHECK(predict_transition(pair, 100, 20, 0.1).verdict == Verdict::FailWhp);
  CHECK(predict_transition(pair, 100, 72, 0.1).verdict == Verdict::TransitionRegion);

  // At most one nonzero constituent among several: every measurement count
  // succeeds, preempting the width verdicts.
  const auto degenerate =
      predict_transition({closed(0.0), closed(0.0), closed(37.2)}, 100, 1, 0.1);
  CHECK(degenerate.verdict == Verdict::DegenerateAlwaysSuccess);
  CHECK(verdict_name(degenerate.verdict) == "DEGENERATE_ALWAYS_SUCCESS");

  // Permutation invariance of the inputs.
  const std::vector<SdimEstimate> shuffled = {closed(40.0), closed(30.0)};
  const auto a = predict_transition(pair, 100, 72, 0.1);
  const auto b = predict_transition(shuffled, 100, 72, 0.1);
  CHECK(a.verdict == b.verdict);
  CHECK(a.delta_total == doctest::Approx(b.delta_total));
  CHECK(a.sigma == doctest::Approx(b.sigma));

  CHECK_THROWS_AS(predict_transition(pair, 100, 0, 0.1), demix::InvalidInputError);
  CHECK_THROWS_AS(predict_transition(pair, 100, 101, 0.1), demix::InvalidInputError);
  CHECK_THROWS_AS(predict_transition({}, 100, 50, 0.1), demix::InvalidInputError);
  CHECK_THROWS_AS(predict_transition({closed(120.0)}, 100, 50, 0.1),
                  demix::InvalidInputError);
}

TEST_CASE("shared-ray probability formula on hand-built profiles") {
  const auto ray = make_exact({0.5, 0.5, 0.0});
  const auto half = make_exact({0.0, 0.5, 0.5});
  // Twice the half tail at (n-1)d + 1 = 3 of the product.
  CHECK(crofton_probability_formula({ray, half}) == doctest::Approx(0.5).epsilon(1e-12));
  // Two rays in the plane almost never share a ray.
  CHECK(crofton_probability_formula({ray, ray}) == doctest::Approx(0.0).epsilon(1e-12));
  // Quarter-plane against halfspace: a 90 degree wedge avoids a random
  // halfspace only when it sits inside the complementary 90 degree arc, so
  // the sharing probability is 3/4. The convolution at index 3 is
  // 0.5*0.5 + 0.25*0.5 = 3/8 and the formula doubles it.
  const auto quarter = exact_orthant_profile(2);
  const double got = crofton_probability_formula({quarter, half});
  CHECK(got == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(crofton_probability_formula({ray}), demix::InvalidInputError);
  CHECK_THROWS_AS(crofton_probability_formula({ray, exact_orthant_profile(3)}),
                  demix::DimensionError);
}

TEST_CASE("shared-ray monte carlo agrees with the formula") {
  const SeedStream s(404);
  Eigen::MatrixXd ray_gen(2, 1);
  ray_gen << 1, 0;
  const auto ray = ConeSpec::from_generators(ray_gen);
  Eigen::MatrixXd half_normal(1, 2);
  half_normal << 1, 0;
  const auto half = ConeSpec::from_inequalities(half_normal);

  const auto est = crofton_probability_mc({ray, half}, 4000, s.child(0));
  CHECK(est.trials == 4000);
  CHECK(std::abs(est.probability - 0.5) <= 4.0 * est.std_error);

  // Two random rays in the plane share a ray with probability zero.
  const auto none = crofton_probability_mc({ray, ray}, 2000, s.child(1));
  CHECK(none.probability == doctest::Approx(0.0));

  // Random orthant pair in R^3: formula against sampling.
  const auto orthant = ConeSpec::orthant(3);
  const double formula =
      crofton_probability_formula({exact_orthant_profile(3), exact_orthant_profile(3)});
  const auto mc = crofton_probability_mc({orthant, orthant}, 4000, s.child(2));
  CHECK(std::abs(mc.probability - formula) <= 4.0 * mc.std_error);

  // A line against the quarter-plane: the line hits it from either side.
  Eigen::MatrixXd line_basis(2, 1);
  line_basis << 1, 0;
  const auto line = ConeSpec::subspace(line_basis);
  const auto line_mc = crofton_probability_mc({line, ConeSpec::orthant(2)}, 4000,
                                              s.child(3));
  const double line_formula = crofton_probability_formula(
      {exact_subspace_profile(2, 1), exact_orthant_profile(2)});
  CHECK(line_formula == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(line_mc.probability - line_formula) <= 4.0 * line_mc.std_error);

  // Sampling requires a pointed generator-form factor to normalize the ray.
  CHECK_THROWS_AS(crofton_probability_mc({line, half}, 1000, s.child(4)),
                  demix::UnsupportedConeError);
  // A generator cone containing a full line is not pointed; with no other
  // pointed factor the normalization is impossible.
  Eigen::MatrixXd unpointed(2, 3);
  unpointed << 1, -1, 0, 0, 0, 1;
  CHECK_THROWS_AS(
      crofton_probability_mc({ConeSpec::from_generators(unpointed), half}, 1000,
                             s.child(5)),
      demix::UnsupportedConeError);
  CHECK_THROWS_AS(crofton_probability_mc({ray}, 1000, s.child(6)),
                  demix::InvalidInputError);
}

TEST_CASE("monte carlo intrinsic volumes match the exact orthant law") {
  const SeedStream s(505);
  const long trials = 100000;
  const auto mc = intrinsic_volumes_mc(ConeSpec::orthant(5), trials, s.child(0));
  const auto exact = exact_orthant_profile(5);
  REQUIRE(mc.dim() == 5);
  CHECK(mc.trials == trials);
  CHECK_FALSE(mc.exact);
  long count_sum = 0;
  for (long c : mc.counts) count_sum += c;
  CHECK(count_sum == trials);
  CHECK(mc.values.sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (int k = 0; k <= 5; ++k) {
    const double p = exact.values[k];
    const double se = std::sqrt(p * (1 - p) / trials);
    CHECK(std::abs(mc.values[k] - p) <= 5.0 * se);
  }
  CHECK_THROWS_AS(intrinsic_volumes_mc(ConeSpec::orthant(21), 10000, s),
                  demix::InvalidInputError);
  CHECK_THROWS_AS(intrinsic_volumes_mc(ConeSpec::orthant(4), 9999, s),
                  demix::InvalidInputError);

  // The dispatching wrapper prefers exact profiles.
  const auto wrapped = intrinsic_volume_profile(ConeSpec::orthant(5), 10000, s.child(1));
  CHECK(wrapped.exact);
  CHECK((wrapped.values - exact.values).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("sampled profiles of random cones satisfy the structural laws") {
  const SeedStream s(606);
  const int d = 4;
  const long trials = 60000;
  const auto gens = demix::rngkit::gaussian_matrix(d, 6, s.child(0));
  const auto cone = ConeSpec::from_generators(gens);
  const auto profile = intrinsic_volumes_mc(cone, trials, s.child(1));
  CHECK(profile.values.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(profile.values.minCoeff() >= 0.0);

  const auto dual_profile = intrinsic_volumes_mc(demix::cones::polar(cone), trials,
                                                 s.child(2));
  auto tail_se = [&](const IntrinsicVolumeProfile& p, int k) {
    const double t = p.tail(k);
    return std::sqrt(std::max(t * (1 - t), 1e-12) / static_cast<double>(p.trials));
  };
  for (int k = 1; k <= d; ++k) {
    // Tail duality: t_k(C) + t_{d-k+1}(polar C) = 1.
    const double lhs = profile.tail(k) + dual_profile.tail(d - k + 1);
    const double se = std::hypot(tail_se(profile, k), tail_se(dual_profile, d - k + 1));
    CHECK(std::abs(lhs - 1.0) <= 4.0 * se + 1e-9);
  }
  // Interlacing within sampling noise.
  for (int k = 0; k <= d; ++k) {
    const double se = 3.0 / std::sqrt(static_cast<double>(trials));
    CHECK(profile.half_tail(k) >= profile.tail(k) / 2.0 - 3.0 * se);
    CHECK(profile.tail(k) / 2.0 >= profile.half_tail(k + 1) - 6.0 * se);
  }
  // Gauss-Bonnet normalization for a cone that is not a subspace.
  const Eigen::VectorXd parity =
      Eigen::VectorXd::NullaryExpr(d + 1, [](Eigen::Index k) { return double(k % 2); });
  const double gb_se = std::sqrt(profile.functional_variance(parity));
  CHECK(std::abs(2.0 * profile.half_tail(1) - 1.0) <= 2.0 * 3.0 * gb_se + 1e-9);
  // Mean of the profile equals the statistical dimension.
  const auto sdim = demix::cones::sdim_mc(cone, trials, s.child(3));
  const Eigen::VectorXd index =
      Eigen::VectorXd::NullaryExpr(d + 1, [](Eigen::Index k) { return double(k); });
  const double mean_se = std::sqrt(profile.functional_variance(index));
  const double comb = std::hypot(mean_se, sdim.std_error);
  CHECK(std::abs(profile.mean() - sdim.value) <= 4.0 * comb);
}

TEST_CASE("rotation-average identity for intrinsic volumes") {
  const SeedStream s(707);

  SUBCASE("two orthants in R^3 at k = 1") {
    const auto check = kinematic_expectation_check(ConeSpec::orthant(3),
                                                   ConeSpec::orthant(3), 1, 150, 1500,
                                                   s.child(0));
    CHECK(check.rhs == doctest::Approx(15.0 / 64.0).epsilon(1e-12));
    CHECK(check.rhs_std_error == 0.0);
    const double se = std::hypot(check.lhs_std_error, check.rhs_std_error);
    CHECK(std::abs(check.lhs - check.rhs) <= 4.0 * se);
  }

  SUBCASE("full space leaves the profile alone") {
    const auto check = kinematic_expectation_check(ConeSpec::orthant(3),
                                                   ConeSpec::full_space(3), 2, 60, 1500,
                                                   s.child(1));
    CHECK(check.rhs == doctest::Approx(3.0 / 8.0).epsilon(1e-12));
    const double se = std::max(check.lhs_std_error, 1e-6);
    CHECK(std::abs(check.lhs - check.rhs) <= 4.0 * se);
  }

  SUBCASE("subspace slice shifts the index") {
    Eigen::MatrixXd basis(3, 2);
    basis << 1, 0, 0, 1, 0, 0;
    const auto check = kinematic_expectation_check(ConeSpec::orthant(3),
                                                   ConeSpec::subspace(basis), 1, 150,
                                                   1500, s.child(2));
    // Product profile at d + k = 4 equals the orthant profile at k + (d-r).
    CHECK(check.rhs == doctest::Approx(exact_orthant_profile(3).values[2]).epsilon(1e-12));
    const double se = std::hypot(check.lhs_std_error, check.rhs_std_error);
    CHECK(std::abs(check.lhs - check.rhs) <= 4.0 * se);
  }

  SUBCASE("input validation") {
    CHECK_THROWS_AS(kinematic_expectation_check(ConeSpec::orthant(7), ConeSpec::orthant(7),
                                                1, 10, 100, s),
                    demix::InvalidInputError);
    CHECK_THROWS_AS(kinematic_expectation_check(ConeSpec::orthant(3), ConeSpec::orthant(3),
                                                0, 10, 100, s),
                    demix::InvalidInputError);
    Eigen::MatrixXd gens(3, 2);
    gens << 1, 0, 0, 1, 0, 0;
    CHECK_THROWS_AS(kinematic_expectation_check(ConeSpec::from_generators(gens),
                                                ConeSpec::orthant(3), 1, 10, 100, s),
                    demix::UnsupportedConeError);
  }
}

TEST_CASE("tail concentration on orthant products") {
  // Single orthant in R^10 at k = 9.
  const auto single = tail_concentration_check({exact_orthant_profile(10)}, 9);
  CHECK(single.omega == doctest::Approx(5.0));
  CHECK(single.theta == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
  CHECK(single.tail == doctest::Approx(11.0 / 1024.0).epsilon(1e-12));
  CHECK(single.bound == doctest::Approx(std::exp(-12.0 / 19.0)).epsilon(1e-12));
  CHECK(single.tail <= single.bound);
  CHECK(single.tail_std_error == 0.0);

  // Two independent orthant factors at k = 14.
  const auto doubled = tail_concentration_check(
      {exact_orthant_profile(10), exact_orthant_profile(10)}, 14);
  CHECK(doubled.omega == doctest::Approx(10.0));
  CHECK(doubled.tail == doctest::Approx(60460.0 / 1048576.0).epsilon(1e-12));
  CHECK(doubled.bound == doctest::Approx(std::exp(-12.0 / 34.0)).epsilon(1e-12));
  CHECK(doubled.tail <= doubled.bound);

  CHECK_THROWS_AS(tail_concentration_check({exact_orthant_profile(10)}, 4),
                  demix::InvalidInputError);
  CHECK_THROWS_AS(tail_concentration_check({}, 5), demix::InvalidInputError);
}
