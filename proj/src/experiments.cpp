#include "demix/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <iomanip>
#include <sstream>

#include "demix/errors.hpp"
#include "demix/kinematics.hpp"
#include "demix/parallel.hpp"

namespace demix::experiments {

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SparseSparseSign: return "SPARSE_SPARSE_SIGN";
    case ExperimentKind::UndersampledSparseSparse: return "UNDERSAMPLED_SPARSE_SPARSE";
  }
  throw InvalidInputError("experiment_name: unknown kind");
}

ExperimentKind experiment_from_name(const std::string& name) {
  if (name == "SPARSE_SPARSE_SIGN") return ExperimentKind::SparseSparseSign;
  if (name == "UNDERSAMPLED_SPARSE_SPARSE") return ExperimentKind::UndersampledSparseSparse;
  throw InvalidInputError("experiment_from_name: unknown experiment '" + name + "'");
}

void PhaseGridConfig::validate() const {
  if (d < 1) throw DimensionError("PhaseGridConfig: d must be positive");
  if (m_values.empty()) throw InvalidInputError("PhaseGridConfig: no m values");
  for (long m : m_values) {
    if (m < 1 || m > d) throw InvalidInputError("PhaseGridConfig: m outside [1, d]");
    if (kind == ExperimentKind::SparseSparseSign && m != d)
      throw InvalidInputError("PhaseGridConfig: the sign-block experiment is fully observed (m = d)");
  }
  if (k_min < 0 || k_min > k_max || k_max > d)
    throw InvalidInputError("PhaseGridConfig: need 0 <= k_min <= k_max <= d");
  if (trials < 1) throw InvalidInputError("PhaseGridConfig: trials must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidInputError("PhaseGridConfig: eta outside (0, 1)");
  if (threads < 1) throw InvalidInputError("PhaseGridConfig: threads must be positive");
}

namespace {

void write_header(std::ostream& out) {
  out << "experiment,d,m,k1,k2,trials,successes,nonconverged,success_rate\n";
}

void write_row(std::ostream& out, const PhaseGridConfig& config, const CellResult& cell) {
  out << experiment_name(config.kind) << ',' << config.d << ',' << cell.m << ',' << cell.k1
      << ',' << cell.k2 << ',' << cell.trials << ',' << cell.successes << ','
      << cell.nonconverged << ',' << std::fixed << std::setprecision(6)
      << cell.success_rate() << '\n';
  out.unsetf(std::ios::fixed);
}

CellResult run_cell(const PhaseGridConfig& config, long m, long k1, long k2) {
  const bool sign_kind = config.kind == ExperimentKind::SparseSparseSign;
  std::vector<solver::BlockSpec> blocks;
  blocks.push_back({cones::Penalty::L1, k1});
  blocks.push_back({cones::Penalty::L1, k2});
  if (sign_kind) blocks.push_back({cones::Penalty::LINF, 0});

  const rngkit::SeedStream cell_stream = rngkit::SeedStream(config.root_seed)
                                             .child(static_cast<std::uint64_t>(m))
                                             .child(static_cast<std::uint64_t>(k1))
                                             .child(static_cast<std::uint64_t>(k2));
  std::atomic<long> successes{0};
  std::atomic<long> nonconverged{0};
  parallel::parallel_for(config.trials, config.threads, [&](long trial) {
    const auto problem =
        solver::synthesize_problem(config.d, static_cast<int>(m), blocks, 0.0,
                                   cell_stream.child(static_cast<std::uint64_t>(trial)),
                                   sign_kind);
    const auto solution = solver::solve_constrained(problem, config.solver);
    if (!solution.converged) nonconverged.fetch_add(1, std::memory_order_relaxed);
    if (solution.converged &&
        solver::check_success(problem, solution, config.solver.success_tolerance))
      successes.fetch_add(1, std::memory_order_relaxed);
  });

  CellResult cell;
  cell.m = m;
  cell.k1 = k1;
  cell.k2 = k2;
  cell.trials = config.trials;
  cell.successes = successes.load();
  cell.nonconverged = nonconverged.load();
  return cell;
}

}  // namespace

PhaseGrid run_phase_grid(const PhaseGridConfig& config, std::ostream* csv) {
  config.validate();
  std::vector<long> ms = config.m_values;
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());

  const auto start = std::chrono::steady_clock::now();
  PhaseGrid grid;
  grid.config = config;
  if (csv) write_header(*csv);
  for (long m : ms)
    for (long k1 = config.k_min; k1 <= config.k_max; ++k1)
      for (long k2 = config.k_min; k2 <= config.k_max; ++k2) {
        grid.cells.push_back(run_cell(config, m, k1, k2));
        if (csv) {
          write_row(*csv, config, grid.cells.back());
          csv->flush();
        }
      }
  grid.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return grid;
}

void write_csv(const PhaseGrid& grid, std::ostream& out) {
  write_header(out);
  for (const auto& cell : grid.cells) write_row(out, grid.config, cell);
}

Eigen::MatrixXd success_field(const PhaseGrid& grid, long m) {
  const long n = grid.config.k_max - grid.config.k_min + 1;
  Eigen::MatrixXd field = Eigen::MatrixXd::Constant(n, n, -1.0);
  for (const auto& cell : grid.cells)
    if (cell.m == m)
      field(cell.k1 - grid.config.k_min, cell.k2 - grid.config.k_min) = cell.success_rate();
  if ((field.array() < 0.0).any())
    throw InvalidInputError("success_field: grid has no complete slice at this m");
  return field;
}

namespace {

// Solve total_l1_budget = bound(k1) + bound(k2) for k2 by bisection; the
// bound is continuous and strictly increasing from 0 at k = 0 to d at k = d.
std::vector<Eigen::Vector2d> curve_for_budget(const PhaseGridConfig& config, double budget,
                                              double step) {
  const double d = static_cast<double>(config.d);
  const double k_lim = std::min(static_cast<double>(config.k_max) + 2.0, d);
  std::vector<Eigen::Vector2d> points;
  if (step <= 0) throw InvalidInputError("predicted_curve: step must be positive");
  for (double k1 = 0.0; k1 <= k_lim + 1e-12; k1 += step) {
    const double target = budget - cones::sdim_l1_bound(std::min(k1, d), d);
    if (target < 0.0 || target > d) continue;
    double lo = 0.0, hi = d;
    for (int it = 0; it < 200 && hi - lo > 1e-11 * std::max(1.0, d); ++it) {
      const double mid = 0.5 * (lo + hi);
      (cones::sdim_l1_bound(mid, d) < target ? lo : hi) = mid;
    }
    const double k2 = 0.5 * (lo + hi);
    if (k2 <= k_lim) points.emplace_back(k1, k2);
  }
  return points;
}

double band_sigma(const PhaseGridConfig& config, double budget) {
  // Spread at the symmetric point of the curve, where both sparse blocks
  // claim half the budget.
  const double d = static_cast<double>(config.d);
  const double delta = std::clamp(0.5 * std::max(budget, 0.0), 0.0, d);
  double variance = 2.0 * std::min(delta, d - delta);
  if (config.kind == ExperimentKind::SparseSparseSign) variance += 0.5 * d;
  return std::sqrt(variance);
}

}  // namespace

std::vector<Eigen::Vector2d> predicted_curve(const PhaseGridConfig& config, long m,
                                             double step) {
  config.validate();
  const double offset =
      config.kind == ExperimentKind::SparseSparseSign ? 0.5 * config.d : 0.0;
  return curve_for_budget(config, static_cast<double>(m) - offset, step);
}

PredictedBand predicted_band(const PhaseGridConfig& config, long m, double step) {
  config.validate();
  const double offset =
      config.kind == ExperimentKind::SparseSparseSign ? 0.5 * config.d : 0.0;
  const double budget = static_cast<double>(m) - offset;
  const double width = kinematics::lambda_star(config.eta, band_sigma(config, budget));
  PredictedBand band;
  band.center = curve_for_budget(config, budget, step);
  band.lower = curve_for_budget(config, budget - width, step);
  band.upper = curve_for_budget(config, budget + width, step);
  return band;
}

namespace {

struct Segment {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
  bool used = false;
};

Eigen::Vector2d edge_point(const Eigen::Vector2d& p, double fp, const Eigen::Vector2d& q,
                           double fq, double level) {
  const double denom = fq - fp;
  double t = denom == 0.0 ? 0.5 : (level - fp) / denom;
  t = std::clamp(t, 0.0, 1.0);
  return p + t * (q - p);
}

std::vector<std::vector<Eigen::Vector2d>> chain_segments(std::vector<Segment>& segments) {
  constexpr double kJoin = 1e-9;
  auto matches = [&](const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
    return (p - q).norm() <= kJoin;
  };
  std::vector<std::vector<Eigen::Vector2d>> polylines;
  for (auto& seed : segments) {
    if (seed.used) continue;
    seed.used = true;
    std::deque<Eigen::Vector2d> pts{seed.a, seed.b};
    bool grew = true;
    while (grew) {
      grew = false;
      for (auto& seg : segments) {
        if (seg.used) continue;
        if (matches(seg.a, pts.back())) { pts.push_back(seg.b); }
        else if (matches(seg.b, pts.back())) { pts.push_back(seg.a); }
        else if (matches(seg.a, pts.front())) { pts.push_front(seg.b); }
        else if (matches(seg.b, pts.front())) { pts.push_front(seg.a); }
        else continue;
        seg.used = true;
        grew = true;
      }
    }
    polylines.emplace_back(pts.begin(), pts.end());
  }
  return polylines;
}

}  // namespace

std::vector<ContourSet> extract_contours(const Eigen::MatrixXd& field, double k_min,
                                         const std::vector<double>& levels) {
  std::vector<ContourSet> sets;
  for (double level : levels) {
    std::vector<Segment> segments;
    // A field with fewer than two nodes per axis has no marching-squares
    // cells; the level sets are empty rather than ill-posed.
    for (long i = 0; i + 1 < field.rows(); ++i)
      for (long j = 0; j + 1 < field.cols(); ++j) {
        const double f00 = field(i, j), f10 = field(i + 1, j);
        const double f11 = field(i + 1, j + 1), f01 = field(i, j + 1);
        const Eigen::Vector2d p00(k_min + i, k_min + j), p10(k_min + i + 1, k_min + j);
        const Eigen::Vector2d p11(k_min + i + 1, k_min + j + 1), p01(k_min + i, k_min + j + 1);
        const int index = (f00 >= level ? 1 : 0) | (f10 >= level ? 2 : 0) |
                          (f11 >= level ? 4 : 0) | (f01 >= level ? 8 : 0);
        if (index == 0 || index == 15) continue;
        const Eigen::Vector2d bottom = edge_point(p00, f00, p10, f10, level);
        const Eigen::Vector2d right = edge_point(p10, f10, p11, f11, level);
        const Eigen::Vector2d top = edge_point(p01, f01, p11, f11, level);
        const Eigen::Vector2d left = edge_point(p00, f00, p01, f01, level);
        auto add = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
          if ((a - b).norm() > 1e-12) segments.push_back({a, b, false});
        };
        switch (index) {
          case 1: add(left, bottom); break;
          case 2: add(bottom, right); break;
          case 3: add(left, right); break;
          case 4: add(right, top); break;
          case 5:
            if (0.25 * (f00 + f10 + f11 + f01) >= level) {
              add(bottom, right);
              add(left, top);
            } else {
              add(bottom, left);
              add(right, top);
            }
            break;
          case 6: add(bottom, top); break;
          case 7: add(left, top); break;
          case 8: add(left, top); break;
          case 9: add(bottom, top); break;
          case 10:
            if (0.25 * (f00 + f10 + f11 + f01) >= level) {
              add(bottom, left);
              add(right, top);
            } else {
              add(bottom, right);
              add(left, top);
            }
            break;
          case 11: add(right, top); break;
          case 12: add(left, right); break;
          case 13: add(bottom, right); break;
          case 14: add(left, bottom); break;
          default: break;
        }
      }
    ContourSet set;
    set.level = level;
    set.polylines = chain_segments(segments);
    sets.push_back(std::move(set));
  }
  return sets;
}

namespace {

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len_sq = ab.squaredNorm();
  if (len_sq == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double point_curve_distance(const Eigen::Vector2d& p,
                            const std::vector<Eigen::Vector2d>& curve) {
  double best = std::numeric_limits<double>::infinity();
  if (curve.size() == 1) return (p - curve[0]).norm();
  for (std::size_t i = 0; i + 1 < curve.size(); ++i)
    best = std::min(best, point_segment_distance(p, curve[i], curve[i + 1]));
  return best;
}

}  // namespace

double fraction_near_curve(const ContourSet& contour,
                           const std::vector<Eigen::Vector2d>& curve, double radius) {
  long total = 0;
  long near = 0;
  for (const auto& polyline : contour.polylines)
    for (const auto& p : polyline) {
      ++total;
      if (!curve.empty() && point_curve_distance(p, curve) <= radius) ++near;
    }
  if (total == 0) return 1.0;
  return static_cast<double>(near) / static_cast<double>(total);
}

namespace {

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

std::string level_color(double level) {
  if (std::abs(level - 0.95) < 1e-9) return "brown";
  if (std::abs(level - 0.5) < 1e-9) return "red";
  if (std::abs(level - 0.05) < 1e-9) return "pink";
  return "blue";
}

// Clips a polyline to an axis-aligned box, splitting it into the visible runs
// with exact boundary crossings (Liang-Barsky per segment).
std::vector<std::vector<Eigen::Vector2d>> clip_polyline(
    const std::vector<Eigen::Vector2d>& points, double lo_x, double hi_x, double lo_y,
    double hi_y) {
  std::vector<std::vector<Eigen::Vector2d>> runs;
  auto clip_segment = [&](Eigen::Vector2d a, Eigen::Vector2d b,
                          Eigen::Vector2d& ca, Eigen::Vector2d& cb) {
    double t0 = 0.0, t1 = 1.0;
    const Eigen::Vector2d delta = b - a;
    const double p[4] = {-delta.x(), delta.x(), -delta.y(), delta.y()};
    const double q[4] = {a.x() - lo_x, hi_x - a.x(), a.y() - lo_y, hi_y - a.y()};
    for (int k = 0; k < 4; ++k) {
      if (p[k] == 0.0) {
        if (q[k] < 0.0) return false;
      } else {
        const double r = q[k] / p[k];
        if (p[k] < 0.0) t0 = std::max(t0, r);
        else t1 = std::min(t1, r);
        if (t0 > t1) return false;
      }
    }
    ca = a + t0 * delta;
    cb = a + t1 * delta;
    return true;
  };
  std::vector<Eigen::Vector2d> run;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    Eigen::Vector2d ca, cb;
    if (!clip_segment(points[i], points[i + 1], ca, cb)) {
      if (run.size() > 1) runs.push_back(std::move(run));
      run.clear();
      continue;
    }
    if (run.empty() || (run.back() - ca).norm() > 1e-12) {
      if (run.size() > 1) runs.push_back(std::move(run));
      run.clear();
      run.push_back(ca);
    }
    run.push_back(cb);
  }
  if (run.size() > 1) runs.push_back(std::move(run));
  return runs;
}

}  // namespace

std::string render_heatmap(const Eigen::MatrixXd& field, double k_min,
                           const std::vector<ContourSet>& contours,
                           const std::vector<Eigen::Vector2d>& predicted,
                           const std::string& title) {
  const long nx = field.rows();
  const long ny = field.cols();
  if (nx < 1 || ny < 1) throw DimensionError("render_heatmap: empty field");
  const double cell = 26.0;
  const double ml = 64.0, mr = 24.0, mt = 48.0, mb = 56.0;
  const double pw = cell * static_cast<double>(nx);
  const double ph = cell * static_cast<double>(ny);
  const double width = ml + pw + mr;
  const double height = mt + ph + mb;
  const double lo_x = k_min - 0.5, hi_x = k_min + static_cast<double>(nx) - 0.5;
  const double lo_y = k_min - 0.5, hi_y = k_min + static_cast<double>(ny) - 0.5;
  auto px = [&](double k1) { return ml + (k1 - lo_x) * cell; };
  auto py = [&](double k2) { return mt + (hi_y - k2) * cell; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(height) << "\">\n";
  svg << "<text x=\"" << fmt(ml + 0.5 * pw) << "\" y=\"" << fmt(mt - 16.0)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << escape_xml(title) << "</text>\n";

  for (long i = 0; i < nx; ++i)
    for (long j = 0; j < ny; ++j) {
      const double rate = std::clamp(field(i, j), 0.0, 1.0);
      const int gray = static_cast<int>(std::lround(255.0 * rate));
      svg << "<rect x=\"" << fmt(px(k_min + static_cast<double>(i) - 0.5)) << "\" y=\""
          << fmt(py(k_min + static_cast<double>(j) + 0.5)) << "\" width=\"" << fmt(cell)
          << "\" height=\"" << fmt(cell) << "\" fill=\"rgb(" << gray << ',' << gray << ','
          << gray << ")\"/>\n";
    }

  // Axes with integer ticks.
  svg << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(mt) << "\" x2=\"" << fmt(ml)
      << "\" y2=\"" << fmt(mt + ph) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(mt + ph) << "\" x2=\"" << fmt(ml + pw)
      << "\" y2=\"" << fmt(mt + ph) << "\" stroke=\"black\"/>\n";
  const long tick_step = std::max(nx, ny) > 12 ? 2 : 1;
  for (long i = 0; i < nx; i += tick_step) {
    const double k = k_min + static_cast<double>(i);
    svg << "<line x1=\"" << fmt(px(k)) << "\" y1=\"" << fmt(mt + ph) << "\" x2=\""
        << fmt(px(k)) << "\" y2=\"" << fmt(mt + ph + 5.0) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(px(k)) << "\" y=\"" << fmt(mt + ph + 20.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << k
        << "</text>\n";
  }
  for (long j = 0; j < ny; j += tick_step) {
    const double k = k_min + static_cast<double>(j);
    svg << "<line x1=\"" << fmt(ml - 5.0) << "\" y1=\"" << fmt(py(k)) << "\" x2=\"" << fmt(ml)
        << "\" y2=\"" << fmt(py(k)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(ml - 9.0) << "\" y=\"" << fmt(py(k) + 4.0)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << k
        << "</text>\n";
  }
  svg << "<text x=\"" << fmt(ml + 0.5 * pw) << "\" y=\"" << fmt(mt + ph + 42.0)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">k1</text>\n";
  svg << "<text x=\"" << fmt(ml - 40.0) << "\" y=\"" << fmt(mt + 0.5 * ph)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 "
      << fmt(ml - 40.0) << ' ' << fmt(mt + 0.5 * ph) << ")\">k2</text>\n";

  auto draw_polyline = [&](const std::vector<Eigen::Vector2d>& pts, const std::string& color,
                           double stroke_width) {
    for (const auto& run : clip_polyline(pts, lo_x, hi_x, lo_y, hi_y)) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
          << fmt(stroke_width) << "\" points=\"";
      for (std::size_t i = 0; i < run.size(); ++i) {
        if (i) svg << ' ';
        svg << fmt(px(run[i].x())) << ',' << fmt(py(run[i].y()));
      }
      svg << "\"/>\n";
    }
  };
  for (const auto& set : contours)
    for (const auto& polyline : set.polylines)
      draw_polyline(polyline, level_color(set.level), 1.5);
  draw_polyline(predicted, "yellow", 2.0);

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace demix::experiments
