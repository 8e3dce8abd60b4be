#include "demix/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Dense>

#include "demix/cones.hpp"
#include "demix/experiments.hpp"
#include "demix/kinematics.hpp"
#include "demix/rngkit.hpp"
#include "demix/solver.hpp"

namespace demix::selftest {

namespace {

std::string describe(double got, double want, double tol) {
  std::ostringstream s;
  s << "got " << got << ", want " << want << " within " << tol;
  return s.str();
}

CheckResult run_check(const std::string& name, const std::function<CheckResult()>& body) {
  try {
    CheckResult result = body();
    result.name = name;
    return result;
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what()};
  }
}

CheckResult near(double got, double want, double tol) {
  return {"", std::abs(got - want) <= tol, describe(got, want, tol)};
}

}  // namespace

std::vector<CheckResult> run_selftest(std::uint64_t seed) {
  const rngkit::SeedStream root(seed);
  std::vector<CheckResult> results;
  auto check = [&](const std::string& name, const std::function<CheckResult()>& body) {
    results.push_back(run_check(name, body));
  };

  check("gaussian_moments", [&] {
    rngkit::Prng prng(root.child(1));
    const long n = 20000;
    double sum = 0.0, sum_sq = 0.0;
    for (long i = 0; i < n; ++i) {
      const double g = prng.next_gaussian();
      sum += g;
      sum_sq += g * g;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const bool ok = std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)) &&
                    std::abs(var - 1.0) < 6.0 / std::sqrt(static_cast<double>(n));
    std::ostringstream s;
    s << "mean " << mean << ", variance " << var;
    return CheckResult{"", ok, s.str()};
  });

  check("seed_stream_reproducible", [&] {
    rngkit::Prng a(root.child(2).child(7));
    rngkit::Prng b(root.child(2).child(7));
    rngkit::Prng c(root.child(2).child(8));
    const std::uint64_t va = a.next_u64(), vb = b.next_u64(), vc = c.next_u64();
    const bool ok = va == vb && va != vc;
    std::ostringstream s;
    s << "same path " << (va == vb ? "matches" : "differs") << ", sibling "
      << (va != vc ? "differs" : "collides");
    return CheckResult{"", ok, s.str()};
  });

  check("haar_orthogonal", [&] {
    const auto q = rngkit::haar_orthogonal(15, root.child(3));
    const double defect =
        (q.transpose() * q - Eigen::MatrixXd::Identity(15, 15)).cwiseAbs().maxCoeff();
    return near(defect, 0.0, 1e-10);
  });

  check("pinv_reconstruction", [&] {
    const Eigen::MatrixXd a = rngkit::gaussian_matrix(5, 9, root.child(4));
    rngkit::PinvOperator pinv(a);
    const Eigen::VectorXd y = rngkit::gaussian_vector(5, root.child(5));
    const double defect = (a * pinv.apply(y) - y).norm();
    return near(defect, 0.0, 1e-8);
  });

  check("l1_ball_projection", [&] {
    const Eigen::VectorXd v = rngkit::gaussian_vector(40, root.child(6)) * 3.0;
    const double radius = 4.0;
    const Eigen::VectorXd p = cones::project_l1_ball(v, radius);
    const Eigen::VectorXd q = cones::project_l1_ball(p, radius);
    const bool ok = p.lpNorm<1>() <= radius * (1 + 1e-12) && (p - q).norm() <= 1e-12 &&
                    (v - p).norm() <= v.norm();
    std::ostringstream s;
    s << "norm " << p.lpNorm<1>() << " vs radius " << radius;
    return CheckResult{"", ok, s.str()};
  });

  check("simplex_projection", [&] {
    const Eigen::VectorXd y = rngkit::gaussian_vector(25, root.child(7));
    const double tau = 2.5;
    const auto proj = cones::project_scaled_simplex(y, tau);
    const bool ok = std::abs(proj.point.sum() - tau) <= 1e-9 && proj.point.minCoeff() >= 0.0 &&
                    (proj.point.array() - (y.array() - proj.theta).max(0.0)).abs().maxCoeff() <=
                        1e-9;
    return CheckResult{"", ok, describe(proj.point.sum(), tau, 1e-9)};
  });

  check("orthant_sdim_half_d", [&] {
    const auto est = cones::sdim_mc(cones::ConeSpec::orthant(10), 4000, root.child(8));
    return near(est.value, 5.0, 5.0 * est.std_error + 1e-9);
  });

  check("sign_anchor_sdim_half_d", [&] {
    Eigen::VectorXd anchor = Eigen::VectorXd::Ones(8);
    anchor[2] = -1.0;
    const auto cone = cones::ConeSpec::descent(cones::Penalty::LINF, anchor);
    const auto est = cones::sdim_mc(cone, 4000, root.child(9));
    return near(est.value, 4.0, 5.0 * est.std_error + 1e-9);
  });

  check("l1_descent_bound_brackets_mc", [&] {
    const int d = 20;
    const long k = 3;
    Eigen::VectorXd anchor = Eigen::VectorXd::Zero(d);
    anchor[0] = 1.0;
    anchor[5] = -1.0;
    anchor[11] = 1.0;
    const auto cone = cones::ConeSpec::descent(cones::Penalty::L1, anchor);
    const auto est = cones::sdim_mc(cone, 4000, root.child(10));
    const double upper = cones::sdim_l1_bound(static_cast<double>(k), d);
    const double lower = upper - 2.0 * std::sqrt(static_cast<double>(k) * d);
    const bool ok = est.value <= upper + 5.0 * est.std_error &&
                    est.value >= lower - 5.0 * est.std_error;
    std::ostringstream s;
    s << "estimate " << est.value << " in [" << lower << ", " << upper << "] +- "
      << 5.0 * est.std_error;
    return CheckResult{"", ok, s.str()};
  });

  check("orthant_profile_gauss_bonnet", [&] {
    const auto profile = kinematics::exact_orthant_profile(9);
    return near(2.0 * profile.half_tail(1), 1.0, 1e-12);
  });

  check("orthant_profile_tail_duality", [&] {
    const auto profile = kinematics::exact_orthant_profile(9);
    double worst = 0.0;
    for (int k = 0; k <= 10; ++k)
      worst = std::max(worst, std::abs(profile.tail(k) + profile.tail(9 - k + 1) - 1.0));
    return near(worst, 0.0, 1e-12);
  });

  check("mc_profile_matches_orthant", [&] {
    const auto exact = kinematics::exact_orthant_profile(6);
    const auto mc =
        kinematics::intrinsic_volumes_mc(cones::ConeSpec::orthant(6), 20000, root.child(11));
    const double worst = (mc.values - exact.values).cwiseAbs().maxCoeff();
    return near(worst, 0.0, 0.02);
  });

  check("crofton_two_orthants_plane", [&] {
    const std::vector<kinematics::IntrinsicVolumeProfile> factors{
        kinematics::exact_orthant_profile(2), kinematics::exact_orthant_profile(2)};
    const double formula = kinematics::crofton_probability_formula(factors);
    const std::vector<cones::ConeSpec> cones_list{cones::ConeSpec::orthant(2),
                                                  cones::ConeSpec::orthant(2)};
    const auto mc = kinematics::crofton_probability_mc(cones_list, 2000, root.child(12));
    const bool ok = std::abs(formula - 0.5) <= 1e-12 &&
                    std::abs(mc.probability - formula) <= 5.0 * mc.std_error + 1e-9;
    std::ostringstream s;
    s << "formula " << formula << ", mc " << mc.probability << " +- " << mc.std_error;
    return CheckResult{"", ok, s.str()};
  });

  check("kinematic_expectation_identity", [&] {
    const auto report = kinematics::kinematic_expectation_check(
        cones::ConeSpec::orthant(3), cones::ConeSpec::orthant(3), 1, 60, 400, root.child(13));
    const double spread =
        5.0 * std::sqrt(report.lhs_std_error * report.lhs_std_error +
                        report.rhs_std_error * report.rhs_std_error) +
        1e-9;
    return near(report.lhs, report.rhs, spread);
  });

  check("transition_width_matches_level", [&] {
    // The width is chosen so the concentration value at lambda_star never
    // exceeds eta; at sigma = 0 the two agree exactly.
    const double eta = 0.05;
    const double at_sigma = kinematics::p_theta(3.0, kinematics::lambda_star(eta, 3.0));
    const double at_zero = kinematics::p_theta(0.0, kinematics::lambda_star(eta, 0.0));
    const bool ok = at_sigma <= eta * (1.0 + 1e-12) &&
                    std::abs(at_zero - eta) <= 1e-12 * eta;
    std::ostringstream s;
    s << "p(sigma=3) " << at_sigma << " <= " << eta << ", p(sigma=0) " << at_zero;
    return CheckResult{"", ok, s.str()};
  });

  check("transition_verdicts", [&] {
    auto delta = [](double v) {
      cones::SdimEstimate e;
      e.value = v;
      e.method = cones::SdimMethod::ClosedForm;
      return e;
    };
    using kinematics::Verdict;
    const std::vector<cones::SdimEstimate> pair{delta(30.0), delta(40.0)};
    const auto stable = kinematics::predict_transition(pair, 100, 99, 0.1);
    const auto fail = kinematics::predict_transition(pair, 100, 20, 0.1);
    const auto mid = kinematics::predict_transition(pair, 100, 72, 0.1);
    const auto degenerate =
        kinematics::predict_transition({delta(30.0), delta(0.0)}, 100, 1, 0.1);
    const bool ok = stable.verdict == Verdict::StableWhp && fail.verdict == Verdict::FailWhp &&
                    mid.verdict == Verdict::TransitionRegion &&
                    degenerate.verdict == Verdict::DegenerateAlwaysSuccess;
    std::ostringstream s;
    s << kinematics::verdict_name(stable.verdict) << '/' << kinematics::verdict_name(fail.verdict)
      << '/' << kinematics::verdict_name(mid.verdict) << '/'
      << kinematics::verdict_name(degenerate.verdict);
    return CheckResult{"", ok, s.str()};
  });

  check("recovery_deep_inside_region", [&] {
    long successes = 0;
    for (int trial = 0; trial < 3; ++trial) {
      const auto problem = solver::synthesize_problem(
          16, 16, {{cones::Penalty::L1, 1}, {cones::Penalty::L1, 1}}, 0.0,
          root.child(14).child(static_cast<std::uint64_t>(trial)));
      const auto solution = solver::solve_constrained(problem);
      if (solution.converged && solver::check_success(problem, solution)) ++successes;
    }
    std::ostringstream s;
    s << successes << "/3 recoveries";
    return CheckResult{"", successes == 3, s.str()};
  });

  check("recovery_fails_undersampled", [&] {
    long successes = 0;
    for (int trial = 0; trial < 3; ++trial) {
      const auto problem = solver::synthesize_problem(
          16, 5, {{cones::Penalty::L1, 2}, {cones::Penalty::L1, 2}}, 0.0,
          root.child(15).child(static_cast<std::uint64_t>(trial)));
      const auto solution = solver::solve_constrained(problem);
      if (solution.converged && solver::check_success(problem, solution)) ++successes;
    }
    std::ostringstream s;
    s << successes << "/3 recoveries";
    return CheckResult{"", successes == 0, s.str()};
  });

  check("contours_of_linear_field", [&] {
    const int n = 9;
    Eigen::MatrixXd field(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) field(i, j) = static_cast<double>(i) / (n - 1);
    const auto sets = experiments::extract_contours(field, 1.0, {0.5});
    double worst = 1e9;
    long vertices = 0;
    for (const auto& polyline : sets[0].polylines)
      for (const auto& p : polyline) {
        worst = std::min(worst, std::abs(p.x() - 5.0));
        vertices += std::abs(p.x() - 5.0) <= 1e-9 ? 1 : 0;
      }
    const long total = [&] {
      long t = 0;
      for (const auto& polyline : sets[0].polylines) t += static_cast<long>(polyline.size());
      return t;
    }();
    std::ostringstream s;
    s << vertices << "/" << total << " vertices on the level line";
    return CheckResult{"", total > 0 && vertices == total, s.str()};
  });

  return results;
}

}  // namespace demix::selftest
