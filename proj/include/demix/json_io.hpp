#pragma once

#include <string>

#include <Eigen/Dense>

#include "json.hpp"

#include "demix/cones.hpp"
#include "demix/experiments.hpp"
#include "demix/kinematics.hpp"
#include "demix/solver.hpp"

namespace demix::json_io {

using nlohmann::json;

// Matrices serialize as {"rows": r, "cols": c, "data": [row-major doubles]}.
json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j, const std::string& context);

json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j, const std::string& context);

// Rejects objects with keys outside `allowed`; parsing is strict everywhere.
void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::vector<std::string>& required, const std::string& context);

json cone_to_json(const cones::ConeSpec& cone);
cones::ConeSpec cone_from_json(const json& j);

json sdim_to_json(const cones::SdimEstimate& estimate);

json profile_to_json(const kinematics::IntrinsicVolumeProfile& profile);
json prediction_to_json(const kinematics::TransitionPrediction& prediction);

json problem_to_json(const solver::DemixProblem& problem);
solver::DemixProblem problem_from_json(const json& j);
json solution_to_json(const solver::DemixSolution& solution);
json stability_to_json(const solver::StabilityReport& report);

json phase_grid_config_to_json(const experiments::PhaseGridConfig& config);
experiments::PhaseGridConfig phase_grid_config_from_json(const json& j);
json phase_grid_summary_to_json(const experiments::PhaseGrid& grid);

}  // namespace demix::json_io
