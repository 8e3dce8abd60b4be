#include <string>
#include <vector>

#include <Eigen/Dense>

#include "demix/cones.hpp"
#include "demix/errors.hpp"
#include "demix/json_io.hpp"
#include "demix/rngkit.hpp"
#include "demix/solver.hpp"
#include "doctest.h"

using namespace demix::json_io;
using demix::cones::ConeSpec;
using demix::cones::ConeVariant;
using demix::cones::Penalty;

TEST_CASE("matrices and vectors round-trip through json") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const json j = matrix_to_json(m);
  CHECK(j.at("rows") == 2);
  CHECK(j.at("cols") == 3);
  REQUIRE(j.at("data").size() == 6);
  // Row-major data layout.
  CHECK(j.at("data")[1].get<double>() == doctest::Approx(2.0));
  CHECK(j.at("data")[3].get<double>() == doctest::Approx(4.0));
  const Eigen::MatrixXd back = matrix_from_json(j, "test");
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd v(3);
  v << -1, 0.5, 2;
  const Eigen::VectorXd vback = vector_from_json(vector_to_json(v), "test");
  CHECK((vback - v).cwiseAbs().maxCoeff() == 0.0);

  json bad = j;
  bad["data"] = json::array({1, 2, 3});  // wrong element count
  CHECK_THROWS_AS(matrix_from_json(bad, "test"), demix::InvalidInputError);
  json extra = j;
  extra["color"] = "red";
  CHECK_THROWS_AS(matrix_from_json(extra, "test"), demix::InvalidInputError);
  CHECK_THROWS_AS(vector_from_json(json{{"x", 1}}, "test"), demix::InvalidInputError);
}

TEST_CASE("require_keys rejects unknown and missing keys with context") {
  const json j{{"a", 1}, {"b", 2}};
  CHECK_NOTHROW(require_keys(j, {"a", "b", "c"}, {"a"}, "ctx"));
  CHECK_THROWS_WITH_AS(require_keys(j, {"a"}, {"a"}, "ctx"),
                       doctest::Contains("'b'"), demix::InvalidInputError);
  CHECK_THROWS_WITH_AS(require_keys(j, {"a", "b"}, {"a", "z"}, "ctx"),
                       doctest::Contains("'z'"), demix::InvalidInputError);
}

TEST_CASE("cones round-trip for every variant") {
  std::vector<ConeSpec> cones;
  cones.push_back(ConeSpec::trivial(3));
  cones.push_back(ConeSpec::orthant(4));
  Eigen::MatrixXd basis(3, 1);
  basis << 1, 0, 0;
  cones.push_back(ConeSpec::subspace(basis));
  Eigen::MatrixXd gens(2, 3);
  gens << 1, 0, 1, 0, 1, 1;
  cones.push_back(ConeSpec::from_generators(gens));
  Eigen::MatrixXd normals(2, 2);
  normals << 1, 0, 0, 1;
  cones.push_back(ConeSpec::from_inequalities(normals));
  Eigen::VectorXd anchor(3);
  anchor << 1, 0, -1;
  cones.push_back(ConeSpec::descent(Penalty::L1, anchor));
  Eigen::VectorXd sign(3);
  sign << 1, -1, 1;
  cones.push_back(ConeSpec::descent(Penalty::LINF, sign));

  for (const auto& cone : cones) {
    const json j = cone_to_json(cone);
    const ConeSpec back = cone_from_json(j);
    CHECK(back.variant == cone.variant);
    CHECK(back.d == cone.d);
    switch (cone.variant) {
      case ConeVariant::Subspace:
        CHECK((back.basis - cone.basis).cwiseAbs().maxCoeff() == 0.0);
        break;
      case ConeVariant::PolyhedralGenerators:
        CHECK((back.generators - cone.generators).cwiseAbs().maxCoeff() == 0.0);
        break;
      case ConeVariant::PolyhedralInequalities:
        CHECK((back.normals - cone.normals).cwiseAbs().maxCoeff() == 0.0);
        break;
      case ConeVariant::DescentCone:
        CHECK(back.penalty == cone.penalty);
        CHECK((back.anchor - cone.anchor).cwiseAbs().maxCoeff() == 0.0);
        break;
      default:
        break;
    }
  }
}

TEST_CASE("cone parsing is strict") {
  CHECK_THROWS_AS(cone_from_json(json::array()), demix::InvalidInputError);
  CHECK_THROWS_AS(cone_from_json(json{{"d", 3}}), demix::InvalidInputError);
  CHECK_THROWS_AS(cone_from_json(json{{"variant", "moebius"}, {"d", 3}}),
                  demix::InvalidInputError);
  // Payload keys from another variant are rejected.
  json j{{"variant", "orthant"}, {"d", 3}, {"basis", matrix_to_json(Eigen::MatrixXd::Identity(3, 1))}};
  CHECK_THROWS_AS(cone_from_json(j), demix::InvalidInputError);
  // Validation runs after parsing: a skewed subspace basis fails.
  Eigen::MatrixXd skewed(2, 1);
  skewed << 1, 1;
  json sub{{"variant", "subspace"}, {"d", 2}, {"basis", matrix_to_json(skewed)}};
  CHECK_THROWS_AS(cone_from_json(sub), demix::InvalidInputError);
  // Fractional d is rejected.
  json frac{{"variant", "orthant"}, {"d", 2.5}};
  CHECK_THROWS_AS(cone_from_json(frac), demix::InvalidInputError);
}

TEST_CASE("problems round-trip with the measurement map present exactly when needed") {
  const demix::rngkit::SeedStream s(2600);
  const auto gaussian = demix::solver::synthesize_problem(
      10, 7, {{Penalty::L1, 2}, {Penalty::L1, 1}}, 1e-3, s);
  const json j = problem_to_json(gaussian);
  CHECK(j.contains("A"));
  const auto back = problem_from_json(j);
  CHECK_NOTHROW(back.validate());
  CHECK(back.d == gaussian.d);
  CHECK(back.m == gaussian.m);
  CHECK(back.n == gaussian.n);
  CHECK((back.z0 - gaussian.z0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.A - gaussian.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.w - gaussian.w).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 2; ++i) {
    CHECK((back.x_true[i] - gaussian.x_true[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.rotations.rotations[i] - gaussian.rotations.rotations[i])
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(back.penalties[i] == gaussian.penalties[i]);
  }

  const auto identity = demix::solver::synthesize_problem(
      8, 8, {{Penalty::L1, 1}, {Penalty::LINF, 0}}, 0.0, s.child(1), true);
  const json ji = problem_to_json(identity);
  CHECK_FALSE(ji.contains("A"));
  const auto iback = problem_from_json(ji);
  CHECK(iback.identity_A);
  CHECK((iback.z0 - identity.z0).cwiseAbs().maxCoeff() == 0.0);

  // An identity problem carrying an explicit A is contradictory.
  json contradictory = ji;
  contradictory["A"] = matrix_to_json(Eigen::MatrixXd::Identity(8, 8));
  CHECK_THROWS_AS(problem_from_json(contradictory), demix::InvalidInputError);
  // Rotations failing orthogonality are rejected on load.
  json corrupt = j;
  corrupt["rotations"][0]["data"][0] = 5.0;
  CHECK_THROWS_AS(problem_from_json(corrupt), demix::NumericalError);
}

TEST_CASE("solutions and stability reports serialize their fields") {
  const demix::rngkit::SeedStream s(2700);
  const auto problem = demix::solver::synthesize_problem(
      10, 10, {{Penalty::L1, 1}, {Penalty::L1, 1}}, 1e-3, s, true);
  const auto solution = demix::solver::solve_constrained(problem);
  REQUIRE(solution.converged);
  const json j = solution_to_json(solution);
  CHECK(j.at("converged").get<bool>());
  CHECK(j.at("iterations").get<long>() == solution.iterations);
  CHECK(j.at("objective").get<double>() == doctest::Approx(solution.objective));
  CHECK(j.at("x_hat").size() == 2);
  CHECK(j.at("per_block_constraint_slack").size() == 2);

  const auto report = demix::solver::stability_report(problem, solution);
  const json r = stability_to_json(report);
  CHECK(r.at("noise_norm").get<double>() == doctest::Approx(1e-3));
  CHECK(r.at("ratio_defined").get<bool>());
  CHECK(r.at("per_block_error").size() == 2);
}

TEST_CASE("phase grid config parses with defaults and strict keys") {
  const json j{{"experiment", "UNDERSAMPLED_SPARSE_SPARSE"},
               {"d", 20},
               {"m_values", json::array({10, 15})}};
  const auto config = phase_grid_config_from_json(j);
  CHECK(config.kind == demix::experiments::ExperimentKind::UndersampledSparseSparse);
  CHECK(config.d == 20);
  REQUIRE(config.m_values.size() == 2);
  CHECK(config.m_values[0] == 10);
  // Defaults from the struct fill everything else.
  CHECK(config.k_min == 1);
  CHECK(config.k_max == 18);
  CHECK(config.trials == 25);
  CHECK(config.eta == doctest::Approx(0.1));
  CHECK(config.root_seed == 42);
  CHECK(config.threads == 1);
  CHECK(config.solver.max_iterations == 50000);

  json full = j;
  full["k_min"] = 2;
  full["k_max"] = 5;
  full["trials"] = 7;
  full["eta"] = 0.05;
  full["root_seed"] = 99;
  full["threads"] = 2;
  full["max_iterations"] = 1000;
  full["gradient_tolerance"] = 1e-6;
  full["success_tolerance"] = 1e-4;
  const auto parsed = phase_grid_config_from_json(full);
  CHECK(parsed.k_min == 2);
  CHECK(parsed.k_max == 5);
  CHECK(parsed.trials == 7);
  CHECK(parsed.root_seed == 99);
  CHECK(parsed.threads == 2);
  CHECK(parsed.solver.max_iterations == 1000);
  CHECK(parsed.solver.gradient_tolerance == doctest::Approx(1e-6));
  CHECK(parsed.solver.success_tolerance == doctest::Approx(1e-4));

  // Round trip through the serializer.
  const auto again = phase_grid_config_from_json(phase_grid_config_to_json(parsed));
  CHECK(again.k_min == parsed.k_min);
  CHECK(again.root_seed == parsed.root_seed);
  CHECK(again.solver.max_iterations == parsed.solver.max_iterations);

  json unknown = j;
  unknown["cheese"] = 1;
  CHECK_THROWS_WITH_AS(phase_grid_config_from_json(unknown),
                       doctest::Contains("'cheese'"), demix::InvalidInputError);
  json missing = j;
  missing.erase("experiment");
  CHECK_THROWS_AS(phase_grid_config_from_json(missing), demix::InvalidInputError);
  // Validation runs on the parsed struct: k_max above d fails.
  json invalid = j;
  invalid["k_max"] = 21;
  CHECK_THROWS_AS(phase_grid_config_from_json(invalid), demix::InvalidInputError);
  // The sign experiment requires every m to equal d.
  json sign = j;
  sign["experiment"] = "SPARSE_SPARSE_SIGN";
  CHECK_THROWS_AS(phase_grid_config_from_json(sign), demix::InvalidInputError);
}

TEST_CASE("grid summaries carry config, cells, and timing") {
  demix::experiments::PhaseGridConfig config;
  config.kind = demix::experiments::ExperimentKind::UndersampledSparseSparse;
  config.d = 8;
  config.m_values = {6};
  config.k_min = 1;
  config.k_max = 2;
  config.trials = 3;
  config.root_seed = 5;
  const auto grid = demix::experiments::run_phase_grid(config);
  const json j = phase_grid_summary_to_json(grid);
  CHECK(j.contains("config"));
  CHECK(j.at("cells").size() == 4);
  CHECK(j.at("wall_seconds").get<double>() > 0.0);
  const auto& cell = j.at("cells")[0];
  CHECK(cell.at("m").get<long>() == 6);
  CHECK(cell.at("k1").get<long>() == 1);
  CHECK(cell.at("trials").get<long>() == 3);
  CHECK(cell.contains("successes"));
  CHECK(cell.contains("nonconverged"));
  CHECK(cell.contains("success_rate"));
}
