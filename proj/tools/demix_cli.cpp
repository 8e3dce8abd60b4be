#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "demix/errors.hpp"
#include "demix/experiments.hpp"
#include "demix/json_io.hpp"
#include "demix/kinematics.hpp"
#include "demix/parallel.hpp"
#include "demix/selftest.hpp"
#include "demix/solver.hpp"

namespace {

using demix::json_io::json;

constexpr std::uint64_t kDefaultSeed = 42;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw demix::InvalidInputError("cannot open config file: " + path);
  json j;
  in >> j;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw demix::InvalidInputError("cannot write output file: " + path);
  out << content;
}

bool env_seed_present() {
  const char* env = std::getenv("DEMIX_SEED");
  return env != nullptr && *env != '\0';
}

std::uint64_t parse_env_seed() {
  const char* env = std::getenv("DEMIX_SEED");
  char* end = nullptr;
  errno = 0;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (errno != 0 || end == env || *end != '\0')
    throw demix::InvalidInputError("DEMIX_SEED must be a nonnegative integer");
  return value;
}

// --seed wins over DEMIX_SEED, which wins over the documented default (42).
std::uint64_t resolve_seed(const CLI::App* cmd, std::uint64_t flag_value) {
  if (cmd->count("--seed") > 0) return flag_value;
  if (env_seed_present()) return parse_env_seed();
  return kDefaultSeed;
}

json points_to_json(const std::vector<Eigen::Vector2d>& points) {
  json a = json::array();
  for (const auto& p : points) a.push_back(json::array({p.x(), p.y()}));
  return a;
}

std::string fixed6(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  return s.str();
}

struct PredictArgs {
  int d = 0;
  long m = 0;
  double eta = 0.1;
  std::vector<long> ks;
  bool sign = false;
  std::vector<double> deltas;
  std::string out;
};

int run_predict(const PredictArgs& args) {
  std::vector<demix::cones::SdimEstimate> estimates;
  for (long k : args.ks) estimates.push_back(demix::cones::sdim_l1_formula(k, args.d));
  if (args.sign) {
    demix::cones::SdimEstimate e;
    e.value = 0.5 * args.d;
    e.method = demix::cones::SdimMethod::ClosedForm;
    estimates.push_back(e);
  }
  for (double v : args.deltas) {
    demix::cones::SdimEstimate e;
    e.value = v;
    e.method = demix::cones::SdimMethod::ClosedForm;
    estimates.push_back(e);
  }
  if (estimates.empty())
    throw demix::InvalidInputError("predict: provide at least one of --k, --sign, --delta");
  const auto prediction =
      demix::kinematics::predict_transition(estimates, args.d, args.m, args.eta);
  std::cout << "delta_total " << fixed6(prediction.delta_total) << '\n'
            << "sigma " << fixed6(prediction.sigma) << '\n'
            << "lambda_star " << fixed6(prediction.lambda_star) << '\n'
            << "verdict " << demix::kinematics::verdict_name(prediction.verdict) << '\n';
  if (!args.out.empty())
    write_text_file(args.out, demix::json_io::prediction_to_json(prediction).dump(2) + "\n");
  return 0;
}

struct SdimArgs {
  std::string config;
  int d = 0;
  long k = -1;
  bool l1 = false;
  bool linf = false;
  long trials = 100000;
  std::uint64_t seed = kDefaultSeed;
  int threads = demix::parallel::hardware_threads();
  std::string out;
};

int run_sdim(const SdimArgs& args) {
  demix::cones::ConeSpec cone;
  if (!args.config.empty()) {
    if (args.l1 || args.linf || args.k >= 0 || args.d > 0)
      throw demix::InvalidInputError("sdim: give either --config or the penalty flags");
    cone = demix::json_io::cone_from_json(load_json_file(args.config));
  } else if (args.l1) {
    if (args.d < 1) throw demix::InvalidInputError("sdim: --l1 needs --d");
    if (args.k < 0 || args.k > args.d)
      throw demix::InvalidInputError("sdim: --l1 needs --k in [0, d]");
    Eigen::VectorXd anchor = Eigen::VectorXd::Zero(args.d);
    for (long i = 0; i < args.k; ++i) anchor[i] = 1.0;
    cone = demix::cones::ConeSpec::descent(demix::cones::Penalty::L1, anchor);
  } else if (args.linf) {
    if (args.d < 1) throw demix::InvalidInputError("sdim: --linf needs --d");
    cone = demix::cones::ConeSpec::descent(demix::cones::Penalty::LINF,
                                           Eigen::VectorXd::Ones(args.d));
  } else {
    throw demix::InvalidInputError("sdim: give --config, --l1, or --linf");
  }

  json report;
  report["cone"] = demix::json_io::cone_to_json(cone);
  const auto closed = demix::cones::sdim_closed_form(cone);
  if (closed) {
    std::cout << "closed_form " << fixed6(*closed) << '\n';
    report["closed_form"] = *closed;
  } else {
    std::cout << "closed_form none\n";
    report["closed_form"] = nullptr;
  }
  report["l1_formula"] = nullptr;
  if (cone.variant == demix::cones::ConeVariant::DescentCone &&
      cone.penalty == demix::cones::Penalty::L1) {
    long k = 0;
    for (Eigen::Index i = 0; i < cone.anchor.size(); ++i)
      if (cone.anchor[i] != 0.0) ++k;
    const auto formula = demix::cones::sdim_l1_formula(k, cone.d);
    std::cout << "l1_formula " << fixed6(formula.value) << '\n';
    report["l1_formula"] = formula.value;
  }
  const auto mc =
      demix::cones::sdim_mc(cone, args.trials, demix::rngkit::SeedStream(args.seed), args.threads);
  std::cout << "mc_value " << fixed6(mc.value) << '\n'
            << "mc_std_error " << fixed6(mc.std_error) << '\n'
            << "trials " << mc.trials << '\n';
  report["mc"] = demix::json_io::sdim_to_json(mc);
  if (!args.out.empty()) write_text_file(args.out, report.dump(2) + "\n");
  return 0;
}

struct SolveArgs {
  std::string config;
  int d = 0;
  long m = 0;
  std::vector<long> ks;
  bool sign = false;
  double noise = 0.0;
  bool identity = false;
  long max_iterations = 50000;
  double gradient_tolerance = 1e-7;
  bool backtracking = false;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
};

int run_solve(const SolveArgs& args) {
  demix::solver::DemixProblem problem;
  if (!args.config.empty()) {
    problem = demix::json_io::problem_from_json(load_json_file(args.config));
  } else {
    if (args.d < 1) throw demix::InvalidInputError("solve: --d is required without --config");
    std::vector<demix::solver::BlockSpec> blocks;
    for (long k : args.ks) blocks.push_back({demix::cones::Penalty::L1, k});
    if (args.sign) blocks.push_back({demix::cones::Penalty::LINF, 0});
    if (blocks.empty())
      throw demix::InvalidInputError("solve: provide at least one of --k or --sign");
    const int m = args.m > 0 ? static_cast<int>(args.m) : args.d;
    problem = demix::solver::synthesize_problem(args.d, m, blocks, args.noise,
                                                demix::rngkit::SeedStream(args.seed),
                                                args.identity);
  }

  demix::solver::SolverConfig config;
  config.max_iterations = args.max_iterations;
  config.gradient_tolerance = args.gradient_tolerance;
  if (args.backtracking)
    config.step_rule = demix::solver::SolverConfig::StepRule::Backtracking;

  const auto solution = demix::solver::solve_constrained(problem, config);
  const bool success =
      solution.converged && demix::solver::check_success(problem, solution);
  std::cout << "converged " << (solution.converged ? "true" : "false") << '\n'
            << "iterations " << solution.iterations << '\n'
            << "objective " << std::scientific << std::setprecision(6) << solution.objective
            << std::defaultfloat << '\n'
            << "success " << (success ? "true" : "false") << '\n';
  for (int i = 0; i < problem.n; ++i) {
    const double err = (solution.x_hat[static_cast<std::size_t>(i)] -
                        problem.x_true[static_cast<std::size_t>(i)])
                           .lpNorm<Eigen::Infinity>();
    std::cout << "block " << i << " error_inf " << std::scientific << std::setprecision(6)
              << err << std::defaultfloat << '\n';
  }
  json report;
  report["solution"] = demix::json_io::solution_to_json(solution);
  report["success"] = success;
  if (solution.converged && problem.w.norm() > 0.0) {
    const auto stability = demix::solver::stability_report(problem, solution);
    std::cout << "noise_norm " << fixed6(stability.noise_norm) << '\n';
    if (stability.ratio_defined)
      std::cout << "stability_ratio " << fixed6(stability.ratio) << '\n';
    report["stability"] = demix::json_io::stability_to_json(stability);
  }
  if (!args.out.empty()) write_text_file(args.out, report.dump(2) + "\n");
  return solution.converged ? 0 : 2;
}

struct PhaseGridArgs {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  long trials = 0;
  int threads = 0;
};

int run_phase_grid(const PhaseGridArgs& args) {
  const json raw_config = load_json_file(args.config);
  auto config = demix::json_io::phase_grid_config_from_json(raw_config);
  if (args.seed_given) config.root_seed = args.seed;
  if (args.trials > 0) config.trials = args.trials;
  if (args.threads > 0)
    config.threads = args.threads;
  else if (!raw_config.contains("threads"))
    config.threads = demix::parallel::hardware_threads();
  config.validate();

  std::filesystem::create_directories(args.out);
  const auto csv_path = std::filesystem::path(args.out) / "grid.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw demix::InvalidInputError("cannot write " + csv_path.string());
  const auto grid = demix::experiments::run_phase_grid(config, &csv);
  csv.close();
  std::cout << "wrote " << csv_path.string() << '\n';

  std::vector<long> ms = config.m_values;
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());

  json per_m = json::array();
  for (long m : ms) {
    const Eigen::MatrixXd field = demix::experiments::success_field(grid, m);
    const auto contours = demix::experiments::extract_contours(
        field, static_cast<double>(config.k_min), {0.95, 0.5, 0.05});
    const auto predicted = demix::experiments::predicted_curve(config, m);
    const std::string title = demix::experiments::experiment_name(config.kind) +
                              " d=" + std::to_string(config.d) + " m=" + std::to_string(m);
    const auto svg_path =
        std::filesystem::path(args.out) / ("heatmap_m" + std::to_string(m) + ".svg");
    write_text_file(svg_path.string(),
                    demix::experiments::render_heatmap(
                        field, static_cast<double>(config.k_min), contours, predicted, title));
    std::cout << "wrote " << svg_path.string() << '\n';

    json contours_json = json::array();
    for (const auto& set : contours) {
      json polylines = json::array();
      for (const auto& polyline : set.polylines) polylines.push_back(points_to_json(polyline));
      contours_json.push_back(json{{"level", set.level}, {"polylines", std::move(polylines)}});
    }
    per_m.push_back(json{{"m", m},
                         {"contours", std::move(contours_json)},
                         {"predicted", points_to_json(predicted)}});
  }

  const json summary{{"config", demix::json_io::phase_grid_config_to_json(config)},
                     {"seed", config.root_seed},
                     {"wall_seconds", grid.wall_seconds},
                     {"per_m", std::move(per_m)}};
  const auto summary_path = std::filesystem::path(args.out) / "summary.json";
  write_text_file(summary_path.string(), summary.dump(2) + "\n");
  std::cout << "wrote " << summary_path.string() << '\n'
            << "wall_seconds " << fixed6(grid.wall_seconds) << '\n';
  return 0;
}

struct ProfileArgs {
  std::string config;
  long trials = 100000;
  std::uint64_t seed = kDefaultSeed;
  int threads = demix::parallel::hardware_threads();
  std::string out;
};

int run_intrinsic_volumes(const ProfileArgs& args) {
  const auto cone = demix::json_io::cone_from_json(load_json_file(args.config));
  const auto profile = demix::kinematics::intrinsic_volume_profile(
      cone, args.trials, demix::rngkit::SeedStream(args.seed), args.threads);
  std::cout << "dim " << profile.dim() << '\n'
            << "exact " << (profile.exact ? "true" : "false") << '\n'
            << "trials " << profile.trials << '\n';
  for (int k = 0; k <= profile.dim(); ++k)
    std::cout << "v " << k << ' ' << fixed6(profile.values[k]) << '\n';
  std::cout << "mean " << fixed6(profile.mean()) << '\n';
  if (!args.out.empty())
    write_text_file(args.out, demix::json_io::profile_to_json(profile).dump(2) + "\n");
  return 0;
}

struct CroftonArgs {
  std::string config;
  long trials = 10000;
  std::uint64_t seed = kDefaultSeed;
  int threads = demix::parallel::hardware_threads();
  std::string out;
};

int run_crofton(const CroftonArgs& args) {
  const json j = load_json_file(args.config);
  demix::json_io::require_keys(j, {"cones"}, {"cones"}, "crofton config");
  if (!j.at("cones").is_array() || j.at("cones").size() < 2)
    throw demix::InvalidInputError("crofton config: 'cones' must list at least two cones");
  std::vector<demix::cones::ConeSpec> cone_list;
  for (const auto& item : j.at("cones"))
    cone_list.push_back(demix::json_io::cone_from_json(item));

  const demix::rngkit::SeedStream root(args.seed);
  std::vector<demix::kinematics::IntrinsicVolumeProfile> profiles;
  for (std::size_t i = 0; i < cone_list.size(); ++i)
    profiles.push_back(demix::kinematics::intrinsic_volume_profile(
        cone_list[i], std::max(args.trials, 10000L), root.child(0).child(i), args.threads));
  const double formula = demix::kinematics::crofton_probability_formula(profiles);
  const auto mc = demix::kinematics::crofton_probability_mc(cone_list, args.trials,
                                                            root.child(1), args.threads);
  std::cout << "formula " << fixed6(formula) << '\n'
            << "mc " << fixed6(mc.probability) << '\n'
            << "std_error " << fixed6(mc.std_error) << '\n'
            << "trials " << mc.trials << '\n';
  if (!args.out.empty()) {
    const json report{{"formula", formula},
                      {"mc", mc.probability},
                      {"std_error", mc.std_error},
                      {"trials", mc.trials}};
    write_text_file(args.out, report.dump(2) + "\n");
  }
  return 0;
}

struct KinematicArgs {
  std::string config;
  long rotation_trials = 200;
  long inner_trials = 2000;
  std::uint64_t seed = kDefaultSeed;
  int threads = demix::parallel::hardware_threads();
  std::string out;
};

int run_kinematic_check(const KinematicArgs& args) {
  const json j = load_json_file(args.config);
  demix::json_io::require_keys(j, {"C", "D", "k"}, {"C", "D", "k"}, "kinematic-check config");
  const auto C = demix::json_io::cone_from_json(j.at("C"));
  const auto D = demix::json_io::cone_from_json(j.at("D"));
  if (!j.at("k").is_number_integer())
    throw demix::InvalidInputError("kinematic-check config: 'k' must be an integer");
  const int k = j.at("k").get<int>();
  const auto report = demix::kinematics::kinematic_expectation_check(
      C, D, k, args.rotation_trials, args.inner_trials, demix::rngkit::SeedStream(args.seed),
      args.threads);
  const double spread = std::sqrt(report.lhs_std_error * report.lhs_std_error +
                                  report.rhs_std_error * report.rhs_std_error);
  const double z = spread > 0.0 ? std::abs(report.lhs - report.rhs) / spread : 0.0;
  std::cout << "lhs " << fixed6(report.lhs) << '\n'
            << "lhs_std_error " << fixed6(report.lhs_std_error) << '\n'
            << "rhs " << fixed6(report.rhs) << '\n'
            << "rhs_std_error " << fixed6(report.rhs_std_error) << '\n'
            << "z " << fixed6(z) << '\n';
  if (!args.out.empty()) {
    const json out{{"lhs", report.lhs},
                   {"lhs_std_error", report.lhs_std_error},
                   {"rhs", report.rhs},
                   {"rhs_std_error", report.rhs_std_error},
                   {"z", z}};
    write_text_file(args.out, out.dump(2) + "\n");
  }
  return 0;
}

int run_selftest_cmd(std::uint64_t seed) {
  const auto results = demix::selftest::run_selftest(seed);
  long passed = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "[ok]  " : "[FAIL] ") << r.name << ": " << r.detail << '\n';
    if (r.passed) ++passed;
  }
  std::cout << passed << '/' << results.size() << " checks passed\n";
  return passed == static_cast<long>(results.size()) ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "demix: constrained demixing of superimposed signals with statistical-dimension "
      "phase-transition predictions (default seed 42; DEMIX_SEED overrides it, --seed wins)"};
  app.require_subcommand(1);

  PredictArgs predict;
  auto* predict_cmd =
      app.add_subcommand("predict", "Transition verdict for m measurements vs. the total "
                                    "statistical dimension");
  predict_cmd->add_option("--d", predict.d, "ambient dimension")->required();
  predict_cmd->add_option("--m", predict.m, "measurement count")->required();
  predict_cmd->add_option("--eta", predict.eta, "probability level for the width")->capture_default_str();
  predict_cmd->add_option("--k", predict.ks, "l1-penalized block sparsity (repeatable)");
  predict_cmd->add_flag("--sign", predict.sign,
                        "add a sup-norm sign block (contributes d/2)");
  predict_cmd->add_option("--delta", predict.deltas,
                          "direct statistical-dimension contribution (repeatable)");
  predict_cmd->add_option("--out", predict.out, "write the prediction as JSON");

  SdimArgs sdim;
  auto* sdim_cmd =
      app.add_subcommand("sdim", "Closed-form and Monte Carlo statistical dimensions");
  sdim_cmd->add_option("--config", sdim.config, "cone description (JSON)");
  sdim_cmd->add_option("--d", sdim.d, "ambient dimension for --l1/--linf");
  sdim_cmd->add_option("--k", sdim.k, "sparsity for --l1");
  sdim_cmd->add_flag("--l1", sdim.l1, "descent cone of the l1 norm at a k-sparse sign vector");
  sdim_cmd->add_flag("--linf", sdim.linf, "descent cone of the sup norm at a sign vector");
  sdim_cmd->add_option("--mc-trials,--trials", sdim.trials, "Monte Carlo trials")->capture_default_str();
  sdim_cmd->add_option("--seed", sdim.seed, "root seed");
  sdim_cmd->add_option("--threads", sdim.threads, "worker threads")->capture_default_str();
  sdim_cmd->add_option("--out", sdim.out, "write the estimates as JSON");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one demixing instance end to end");
  solve_cmd->add_option("--config", solve.config, "problem instance (JSON)");
  solve_cmd->add_option("--d", solve.d, "ambient dimension");
  solve_cmd->add_option("--m", solve.m, "measurement count (default d)");
  solve_cmd->add_option("--k", solve.ks, "l1 block sparsity (repeatable)");
  solve_cmd->add_flag("--sign", solve.sign, "append a sup-norm sign block");
  solve_cmd->add_option("--noise", solve.noise, "Euclidean noise norm")->capture_default_str();
  solve_cmd->add_flag("--identity", solve.identity, "identity measurement map (m = d)");
  solve_cmd->add_option("--max-iterations", solve.max_iterations, "iteration cap")->capture_default_str();
  solve_cmd->add_option("--gradient-tolerance", solve.gradient_tolerance,
                        "mapping-norm stopping threshold")->capture_default_str();
  solve_cmd->add_flag("--backtracking", solve.backtracking, "use backtracking line search");
  solve_cmd->add_option("--seed", solve.seed, "root seed");
  solve_cmd->add_option("--out", solve.out, "write the solution as JSON");

  PhaseGridArgs grid;
  auto* grid_cmd =
      app.add_subcommand("phase-grid", "Full success-rate grid with contours, curve, and SVG");
  grid_cmd->add_option("--config", grid.config, "grid configuration (JSON)")->required();
  grid_cmd->add_option("--out", grid.out, "output directory")->capture_default_str();
  grid_cmd->add_option("--seed", grid.seed, "override the configured root seed");
  grid_cmd->add_option("--trials", grid.trials, "override trials per cell");
  grid_cmd->add_option("--threads", grid.threads, "override worker threads");

  ProfileArgs profile;
  auto* profile_cmd =
      app.add_subcommand("intrinsic-volumes", "Face-dimension profile of a cone");
  profile_cmd->add_option("--config", profile.config, "cone description (JSON)")->required();
  profile_cmd->add_option("--trials", profile.trials, "Monte Carlo trials")->capture_default_str();
  profile_cmd->add_option("--seed", profile.seed, "root seed");
  profile_cmd->add_option("--threads", profile.threads, "worker threads")->capture_default_str();
  profile_cmd->add_option("--out", profile.out, "write the profile as JSON");

  CroftonArgs crofton;
  auto* crofton_cmd = app.add_subcommand(
      "crofton", "Shared-ray probability of randomly rotated cones: formula vs. Monte Carlo");
  crofton_cmd->add_option("--config", crofton.config, "JSON with a 'cones' list")->required();
  crofton_cmd->add_option("--trials", crofton.trials, "Monte Carlo trials")->capture_default_str();
  crofton_cmd->add_option("--seed", crofton.seed, "root seed");
  crofton_cmd->add_option("--threads", crofton.threads, "worker threads")->capture_default_str();
  crofton_cmd->add_option("--out", crofton.out, "write the comparison as JSON");

  KinematicArgs kinematic;
  auto* kinematic_cmd = app.add_subcommand(
      "kinematic-check", "Rotation-average identity for intrinsic volumes of intersections");
  kinematic_cmd->add_option("--config", kinematic.config, "JSON with cones C, D and index k")
      ->required();
  kinematic_cmd->add_option("--rotation-trials", kinematic.rotation_trials,
                            "outer rotation draws")->capture_default_str();
  kinematic_cmd->add_option("--inner-trials", kinematic.inner_trials,
                            "projection samples per rotation")->capture_default_str();
  kinematic_cmd->add_option("--seed", kinematic.seed, "root seed");
  kinematic_cmd->add_option("--threads", kinematic.threads, "worker threads")->capture_default_str();
  kinematic_cmd->add_option("--out", kinematic.out, "write the comparison as JSON");

  std::uint64_t selftest_seed = kDefaultSeed;
  auto* selftest_cmd =
      app.add_subcommand("selftest", "Run the reduced-scale invariant suite");
  selftest_cmd->add_option("--seed", selftest_seed, "root seed");

  try {
    app.parse(argc, argv);
    if (predict_cmd->parsed()) return run_predict(predict);
    if (sdim_cmd->parsed()) {
      sdim.seed = resolve_seed(sdim_cmd, sdim.seed);
      return run_sdim(sdim);
    }
    if (solve_cmd->parsed()) {
      solve.seed = resolve_seed(solve_cmd, solve.seed);
      return run_solve(solve);
    }
    if (grid_cmd->parsed()) {
      grid.seed_given = grid_cmd->count("--seed") > 0 || env_seed_present();
      grid.seed = resolve_seed(grid_cmd, grid.seed);
      return run_phase_grid(grid);
    }
    if (profile_cmd->parsed()) {
      profile.seed = resolve_seed(profile_cmd, profile.seed);
      return run_intrinsic_volumes(profile);
    }
    if (crofton_cmd->parsed()) {
      crofton.seed = resolve_seed(crofton_cmd, crofton.seed);
      return run_crofton(crofton);
    }
    if (kinematic_cmd->parsed()) {
      kinematic.seed = resolve_seed(kinematic_cmd, kinematic.seed);
      return run_kinematic_check(kinematic);
    }
    if (selftest_cmd->parsed())
      return run_selftest_cmd(resolve_seed(selftest_cmd, selftest_seed));
    std::cerr << "usage error: no subcommand\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const demix::InvalidInputError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
}
