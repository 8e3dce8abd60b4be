#include "demix/json_io.hpp"

#include <algorithm>

#include "demix/errors.hpp"

namespace demix::json_io {

namespace {

double number_at(const json& j, const std::string& key, const std::string& context) {
  if (!j.at(key).is_number())
    throw InvalidInputError(context + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

long integer_at(const json& j, const std::string& key, const std::string& context) {
  if (!j.at(key).is_number_integer())
    throw InvalidInputError(context + ": '" + key + "' must be an integer");
  return j.at(key).get<long>();
}

std::string string_at(const json& j, const std::string& key, const std::string& context) {
  if (!j.at(key).is_string())
    throw InvalidInputError(context + ": '" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& context) {
  require_keys(j, {"rows", "cols", "data"}, {"rows", "cols", "data"}, context);
  const long rows = integer_at(j, "rows", context);
  const long cols = integer_at(j, "cols", context);
  if (rows < 0 || cols < 0) throw InvalidInputError(context + ": negative matrix shape");
  const auto& data = j.at("data");
  if (!data.is_array() || static_cast<long>(data.size()) != rows * cols)
    throw InvalidInputError(context + ": data length != rows*cols");
  Eigen::MatrixXd m(rows, cols);
  long idx = 0;
  for (long i = 0; i < rows; ++i)
    for (long c = 0; c < cols; ++c, ++idx) {
      if (!data[static_cast<std::size_t>(idx)].is_number())
        throw InvalidInputError(context + ": matrix entries must be numbers");
      m(i, c) = data[static_cast<std::size_t>(idx)].get<double>();
    }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json data = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v[i]);
  return data;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& context) {
  if (!j.is_array()) throw InvalidInputError(context + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw InvalidInputError(context + ": vector entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::vector<std::string>& required, const std::string& context) {
  if (!j.is_object()) throw InvalidInputError(context + ": expected a JSON object");
  for (const auto& item : j.items())
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw InvalidInputError(context + ": unknown key '" + item.key() + "'");
  for (const auto& key : required)
    if (!j.contains(key))
      throw InvalidInputError(context + ": missing required key '" + key + "'");
}

json cone_to_json(const cones::ConeSpec& cone) {
  json j{{"variant", cones::variant_name(cone.variant)}, {"d", cone.d}};
  switch (cone.variant) {
    case cones::ConeVariant::Trivial:
    case cones::ConeVariant::Orthant:
      break;
    case cones::ConeVariant::Subspace:
      j["basis"] = matrix_to_json(cone.basis);
      break;
    case cones::ConeVariant::PolyhedralGenerators:
      j["generators"] = matrix_to_json(cone.generators);
      break;
    case cones::ConeVariant::PolyhedralInequalities:
      j["normals"] = matrix_to_json(cone.normals);
      break;
    case cones::ConeVariant::DescentCone:
      j["penalty"] = cones::penalty_name(cone.penalty);
      j["anchor"] = vector_to_json(cone.anchor);
      break;
  }
  return j;
}

cones::ConeSpec cone_from_json(const json& j) {
  const std::string context = "cone";
  if (!j.is_object()) throw InvalidInputError(context + ": expected a JSON object");
  if (!j.contains("variant") || !j.at("variant").is_string())
    throw InvalidInputError(context + ": missing string key 'variant'");
  const std::string variant = j.at("variant").get<std::string>();

  cones::ConeSpec cone;
  if (variant == "trivial" || variant == "orthant") {
    require_keys(j, {"variant", "d"}, {"variant", "d"}, context);
    cone.variant = variant == "trivial" ? cones::ConeVariant::Trivial
                                        : cones::ConeVariant::Orthant;
    cone.d = static_cast<int>(integer_at(j, "d", context));
  } else if (variant == "subspace") {
    require_keys(j, {"variant", "d", "basis"}, {"variant", "d", "basis"}, context);
    cone.variant = cones::ConeVariant::Subspace;
    cone.d = static_cast<int>(integer_at(j, "d", context));
    cone.basis = matrix_from_json(j.at("basis"), context + ".basis");
  } else if (variant == "generators") {
    require_keys(j, {"variant", "d", "generators"}, {"variant", "d", "generators"}, context);
    cone.variant = cones::ConeVariant::PolyhedralGenerators;
    cone.d = static_cast<int>(integer_at(j, "d", context));
    cone.generators = matrix_from_json(j.at("generators"), context + ".generators");
  } else if (variant == "inequalities") {
    require_keys(j, {"variant", "d", "normals"}, {"variant", "d", "normals"}, context);
    cone.variant = cones::ConeVariant::PolyhedralInequalities;
    cone.d = static_cast<int>(integer_at(j, "d", context));
    cone.normals = matrix_from_json(j.at("normals"), context + ".normals");
  } else if (variant == "descent_cone") {
    require_keys(j, {"variant", "d", "penalty", "anchor"},
                 {"variant", "d", "penalty", "anchor"}, context);
    cone.variant = cones::ConeVariant::DescentCone;
    cone.d = static_cast<int>(integer_at(j, "d", context));
    cone.penalty = cones::penalty_from_name(string_at(j, "penalty", context));
    cone.anchor = vector_from_json(j.at("anchor"), context + ".anchor");
  } else {
    throw InvalidInputError(context + ": unknown variant '" + variant + "'");
  }
  cone.validate();
  return cone;
}

json sdim_to_json(const cones::SdimEstimate& estimate) {
  return json{{"value", estimate.value},
              {"std_error", estimate.std_error},
              {"method", cones::sdim_method_name(estimate.method)},
              {"trials", estimate.trials}};
}

json profile_to_json(const kinematics::IntrinsicVolumeProfile& profile) {
  return json{{"values", vector_to_json(profile.values)},
              {"trials", profile.trials},
              {"exact", profile.exact},
              {"mean", profile.mean()}};
}

json prediction_to_json(const kinematics::TransitionPrediction& prediction) {
  return json{{"delta_total", prediction.delta_total},
              {"sigma", prediction.sigma},
              {"lambda_star", prediction.lambda_star},
              {"eta", prediction.eta},
              {"m", prediction.m},
              {"verdict", kinematics::verdict_name(prediction.verdict)}};
}

json problem_to_json(const solver::DemixProblem& problem) {
  problem.validate();
  json rotations = json::array();
  for (const auto& q : problem.rotations.rotations) rotations.push_back(matrix_to_json(q));
  json penalties = json::array();
  for (auto p : problem.penalties) penalties.push_back(cones::penalty_name(p));
  json blocks = json::array();
  for (const auto& x : problem.x_true) blocks.push_back(vector_to_json(x));
  json j{{"d", problem.d},
         {"m", problem.m},
         {"n", problem.n},
         {"penalties", std::move(penalties)},
         {"x_true", std::move(blocks)},
         {"rotations", std::move(rotations)},
         {"identity_A", problem.identity_A},
         {"w", vector_to_json(problem.w)},
         {"z0", vector_to_json(problem.z0)}};
  if (!problem.identity_A) j["A"] = matrix_to_json(problem.A);
  return j;
}

solver::DemixProblem problem_from_json(const json& j) {
  const std::string context = "problem";
  require_keys(j,
               {"d", "m", "n", "penalties", "x_true", "rotations", "identity_A", "A", "w", "z0"},
               {"d", "m", "n", "penalties", "x_true", "rotations", "identity_A", "w", "z0"},
               context);
  solver::DemixProblem problem;
  problem.d = static_cast<int>(integer_at(j, "d", context));
  problem.m = static_cast<int>(integer_at(j, "m", context));
  problem.n = static_cast<int>(integer_at(j, "n", context));
  if (!j.at("identity_A").is_boolean())
    throw InvalidInputError(context + ": 'identity_A' must be a boolean");
  problem.identity_A = j.at("identity_A").get<bool>();
  if (problem.identity_A == j.contains("A"))
    throw InvalidInputError(context + ": provide 'A' exactly when identity_A is false");

  const auto& penalties = j.at("penalties");
  if (!penalties.is_array())
    throw InvalidInputError(context + ": 'penalties' must be an array");
  for (const auto& p : penalties) {
    if (!p.is_string()) throw InvalidInputError(context + ": penalties must be strings");
    problem.penalties.push_back(cones::penalty_from_name(p.get<std::string>()));
  }

  const auto& blocks = j.at("x_true");
  if (!blocks.is_array()) throw InvalidInputError(context + ": 'x_true' must be an array");
  for (std::size_t i = 0; i < blocks.size(); ++i)
    problem.x_true.push_back(
        vector_from_json(blocks[i], context + ".x_true[" + std::to_string(i) + "]"));

  const auto& rotations = j.at("rotations");
  if (!rotations.is_array())
    throw InvalidInputError(context + ": 'rotations' must be an array");
  problem.rotations.d = problem.d;
  for (std::size_t i = 0; i < rotations.size(); ++i)
    problem.rotations.rotations.push_back(
        matrix_from_json(rotations[i], context + ".rotations[" + std::to_string(i) + "]"));

  if (!problem.identity_A) problem.A = matrix_from_json(j.at("A"), context + ".A");
  problem.w = vector_from_json(j.at("w"), context + ".w");
  problem.z0 = vector_from_json(j.at("z0"), context + ".z0");
  problem.validate();
  rngkit::validate_rotations(problem.rotations);
  return problem;
}

json solution_to_json(const solver::DemixSolution& solution) {
  json blocks = json::array();
  for (const auto& x : solution.x_hat) blocks.push_back(vector_to_json(x));
  return json{{"x_hat", std::move(blocks)},
              {"objective", solution.objective},
              {"iterations", solution.iterations},
              {"converged", solution.converged},
              {"per_block_constraint_slack", solution.per_block_constraint_slack}};
}

json stability_to_json(const solver::StabilityReport& report) {
  return json{{"noise_norm", report.noise_norm},
              {"per_block_error", report.per_block_error},
              {"ratio", report.ratio},
              {"ratio_defined", report.ratio_defined}};
}

json phase_grid_config_to_json(const experiments::PhaseGridConfig& config) {
  return json{{"experiment", experiments::experiment_name(config.kind)},
              {"d", config.d},
              {"m_values", config.m_values},
              {"k_min", config.k_min},
              {"k_max", config.k_max},
              {"trials", config.trials},
              {"eta", config.eta},
              {"root_seed", config.root_seed},
              {"threads", config.threads},
              {"max_iterations", config.solver.max_iterations},
              {"gradient_tolerance", config.solver.gradient_tolerance},
              {"success_tolerance", config.solver.success_tolerance}};
}

experiments::PhaseGridConfig phase_grid_config_from_json(const json& j) {
  const std::string context = "phase_grid_config";
  require_keys(j,
               {"experiment", "d", "m_values", "k_min", "k_max", "trials", "eta", "root_seed",
                "threads", "max_iterations", "gradient_tolerance", "success_tolerance"},
               {"experiment", "d", "m_values"}, context);
  experiments::PhaseGridConfig config;
  config.kind = experiments::experiment_from_name(string_at(j, "experiment", context));
  config.d = static_cast<int>(integer_at(j, "d", context));
  const auto& ms = j.at("m_values");
  if (!ms.is_array() || ms.empty())
    throw InvalidInputError(context + ": 'm_values' must be a nonempty array");
  for (const auto& m : ms) {
    if (!m.is_number_integer())
      throw InvalidInputError(context + ": m_values entries must be integers");
    config.m_values.push_back(m.get<long>());
  }
  if (j.contains("k_min")) config.k_min = integer_at(j, "k_min", context);
  if (j.contains("k_max")) config.k_max = integer_at(j, "k_max", context);
  if (j.contains("trials")) config.trials = integer_at(j, "trials", context);
  if (j.contains("eta")) config.eta = number_at(j, "eta", context);
  if (j.contains("root_seed")) {
    if (!j.at("root_seed").is_number_integer() && !j.at("root_seed").is_number_unsigned())
      throw InvalidInputError(context + ": 'root_seed' must be an integer");
    config.root_seed = j.at("root_seed").get<std::uint64_t>();
  }
  if (j.contains("threads")) config.threads = static_cast<int>(integer_at(j, "threads", context));
  if (j.contains("max_iterations"))
    config.solver.max_iterations = integer_at(j, "max_iterations", context);
  if (j.contains("gradient_tolerance"))
    config.solver.gradient_tolerance = number_at(j, "gradient_tolerance", context);
  if (j.contains("success_tolerance"))
    config.solver.success_tolerance = number_at(j, "success_tolerance", context);
  config.validate();
  return config;
}

json phase_grid_summary_to_json(const experiments::PhaseGrid& grid) {
  json cells = json::array();
  for (const auto& cell : grid.cells)
    cells.push_back(json{{"m", cell.m},
                         {"k1", cell.k1},
                         {"k2", cell.k2},
                         {"trials", cell.trials},
                         {"successes", cell.successes},
                         {"nonconverged", cell.nonconverged},
                         {"success_rate", cell.success_rate()}});
  return json{{"config", phase_grid_config_to_json(grid.config)},
              {"cells", std::move(cells)},
              {"wall_seconds", grid.wall_seconds}};
}

}  // namespace demix::json_io
