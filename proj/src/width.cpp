#include "sphereflow/width.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "sphereflow/format.hpp"

namespace sphereflow {

const char* to_string(ConformalSpec::Kind kind) {
  switch (kind) {
    case ConformalSpec::Kind::None: return "none";
    case ConformalSpec::Kind::Constant: return "constant";
    case ConformalSpec::Kind::GaussianBand: return "gaussian_band";
  }
  return "?";
}

void ConformalSpec::validate() const {
  if (!std::isfinite(value) || !std::isfinite(amplitude)) {
    fail(ErrorCode::Config, "conformal factor parameters must be finite");
  }
  if (kind == Kind::GaussianBand) {
    if (!(width > 0.0)) fail(ErrorCode::Config, "conformal band width must be positive");
    if (axis < 0 || axis > 3) fail(ErrorCode::Config, "conformal band axis must be in 0..3");
  }
}

std::string ConformalSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::None: os << "round S^3"; break;
    case Kind::Constant: os << "conformal S^3, phi = " << format_double(value); break;
    case Kind::GaussianBand:
      os << "conformal S^3, phi = " << format_double(amplitude) << " exp(-(x" << axis << " / "
         << format_double(width) << ")^2)";
      break;
  }
  return os.str();
}

AmbientModel width_metric(const ConformalSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ConformalSpec::Kind::None: return AmbientModel::round_sphere(3);
    case ConformalSpec::Kind::Constant: {
      double c = spec.value;
      return AmbientModel::conformal_sphere3([c](const AmbientPoint&) { return c; }, spec.describe());
    }
    case ConformalSpec::Kind::GaussianBand: {
      double amp = spec.amplitude, w = spec.width;
      int axis = spec.axis;
      return AmbientModel::conformal_sphere3(
          [amp, w, axis](const AmbientPoint& p) {
            double s = p(axis) / w;
            return amp * std::exp(-s * s);
          },
          spec.describe());
    }
  }
  return AmbientModel::round_sphere(3);
}

Eigen::VectorXd sweep_lower_bounds() { return -sweep_upper_bounds(); }

Eigen::VectorXd sweep_upper_bounds() {
  Eigen::VectorXd u(kSweepParameters);
  u << 0.6, 0.6, 0.6, 0.6, std::numbers::pi, std::numbers::pi, std::numbers::pi, std::numbers::pi,
      std::numbers::pi, std::numbers::pi, 1.0, 1.0;
  return u;
}

namespace {

constexpr int kFlowSteps = 16;
constexpr double kMaxMoebius = 0.9;

Eigen::Vector4d field(const Eigen::VectorXd& q, const Eigen::Vector4d& x) {
  static constexpr int planes[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  Eigen::Vector4d v = Eigen::Vector4d::Zero();
  for (int k = 0; k < 6; ++k) {
    int i = planes[k][0], j = planes[k][1];
    v(i) -= q(4 + k) * x(j);
    v(j) += q(4 + k) * x(i);
  }
  Eigen::Vector4d dx(x(0), -x(1), x(2), -x(3));
  Eigen::Vector4d g = Eigen::Vector4d::Zero();
  g.head<2>() = q(10) * dx.head<2>();
  g.tail<2>() = q(11) * dx.tail<2>();
  v += 2.0 * (g - x.dot(g) * x);
  return v;
}

}  // namespace

Eigen::Vector4d sweep_diffeomorphism(const Eigen::VectorXd& params, const Eigen::Vector4d& x0) {
  if (params.size() != kSweepParameters) {
    fail(ErrorCode::InvalidInput, "sweep-out parameter vector must have 12 entries");
  }
  Eigen::Vector4d x = x0;
  if (params.tail(8).cwiseAbs().maxCoeff() > 0.0) {
    const double h = 1.0 / kFlowSteps;
    for (int s = 0; s < kFlowSteps; ++s) {
      Eigen::Vector4d k1 = field(params, x);
      Eigen::Vector4d k2 = field(params, x + 0.5 * h * k1);
      Eigen::Vector4d k3 = field(params, x + 0.5 * h * k2);
      Eigen::Vector4d k4 = field(params, x + h * k3);
      x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      x.normalize();
    }
  }
  Eigen::Vector4d a = params.head<4>();
  double na = a.norm();
  if (na > kMaxMoebius) a *= kMaxMoebius / na;
  if (a.squaredNorm() > 0.0) {
    double a2 = a.squaredNorm();
    double ax = a.dot(x);
    double den = 1.0 + 2.0 * ax + a2;
    x = ((1.0 - a2) * (x + a) + den * a) / den;
    x.normalize();
  }
  return x;
}

SweepOut standard_sweepout(const AmbientModel& metric, int n_t, int mesh_level) {
  if (metric.kind() == AmbientKind::Euclidean || metric.dim() != 3) {
    fail(ErrorCode::InvalidInput, "sweep-outs need a round or conformal S^3");
  }
  if (n_t < 3) fail(ErrorCode::InvalidInput, "sweep-out needs at least 3 slices");
  SweepOut s;
  s.metric = metric;
  s.mesh = build_icosphere(mesh_level);
  for (int i = 0; i < n_t; ++i) s.t.push_back(-1.0 + 2.0 * i / (n_t - 1));
  s.t.front() = -1.0;
  s.t.back() = 1.0;
  return s;
}

namespace {

std::vector<Eigen::Vector4d> slice_points(const SweepOut& sweep, double t) {
  double r = std::sqrt(std::max(0.0, 1.0 - t * t));
  std::vector<Eigen::Vector4d> out;
  out.reserve(sweep.mesh->num_vertices());
  for (const auto& p : sweep.mesh->reference()) {
    out.push_back(sweep_diffeomorphism(sweep.params, Eigen::Vector4d(r * p.x(), r * p.y(), r * p.z(), t)));
  }
  return out;
}

ImmersedSurface surface_of(const SweepOut& sweep, const std::vector<Eigen::Vector4d>& pts) {
  std::vector<AmbientPoint> pos;
  pos.reserve(pts.size());
  for (const auto& y : pts) {
    AmbientPoint q(4);
    q << y(0), y(1), y(2), y(3);
    pos.push_back(q);
  }
  return ImmersedSurface(sweep.mesh, std::move(pos), sweep.metric);
}

double longest_reference_edge(const TriangleMesh& mesh) {
  double e = 0.0;
  for (const auto& f : mesh.faces()) {
    for (int k = 0; k < 3; ++k) {
      e = std::max(e, (mesh.reference()[f[k]] - mesh.reference()[f[(k + 1) % 3]]).norm());
    }
  }
  return e;
}

void check_resolution(const SweepOut& sweep, const std::vector<Eigen::Vector4d>& pts) {
  const double limit = std::max(kMaxSliceEdge, longest_reference_edge(*sweep.mesh));
  for (const auto& f : sweep.mesh->faces()) {
    for (int k = 0; k < 3; ++k) {
      double d = std::acos(std::clamp(pts[f[k]].dot(pts[f[(k + 1) % 3]]), -1.0, 1.0));
      if (d > limit) {
        fail(ErrorCode::DegenerateMesh, "under-resolved: edge " + format_double(d) + " exceeds " +
                                            format_double(limit));
      }
    }
  }
}

double checked_area(const SweepOut& sweep, const std::vector<Eigen::Vector4d>& pts, int index,
                    double t) {
  try {
    check_resolution(sweep, pts);
    return area(surface_of(sweep, pts));
  } catch (const Error& e) {
    std::ostringstream os;
    os << "slice " << index << " (t = " << format_double(t) << "): " << e.what();
    fail(e.code(), os.str());
  }
}

double max_displacement(const std::vector<Eigen::Vector4d>& a, const std::vector<Eigen::Vector4d>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, (a[i] - b[i]).norm());
  return d;
}

}  // namespace

ImmersedSurface slice_surface(const SweepOut& sweep, int i) {
  if (i <= 0 || i + 1 >= sweep.num_slices()) {
    fail(ErrorCode::InvalidInput, "slice " + std::to_string(i) + " is a point slice or out of range");
  }
  return surface_of(sweep, slice_points(sweep, sweep.t[i]));
}

std::vector<double> slice_areas(const SweepOut& sweep) {
  std::vector<double> out(sweep.t.size(), 0.0);
  for (int i = 1; i + 1 < sweep.num_slices(); ++i) {
    out[i] = checked_area(sweep, slice_points(sweep, sweep.t[i]), i, sweep.t[i]);
  }
  return out;
}

WidthReport evaluate_L(const SweepOut& sweep) {
  if (sweep.num_slices() < 3) fail(ErrorCode::InvalidInput, "sweep-out needs at least 3 slices");
  WidthReport rep;
  rep.params = sweep.params;
  rep.metric = sweep.metric.description();
  const int n = sweep.num_slices();
  auto area_at = [&](int index, double t, const std::vector<Eigen::Vector4d>& pts) {
    return (index == 0 || index == n - 1) ? 0.0 : checked_area(sweep, pts, index, t);
  };
  std::vector<Eigen::Vector4d> prev = slice_points(sweep, sweep.t[0]);
  rep.t.push_back(sweep.t[0]);
  rep.areas.push_back(0.0);
  for (int i = 1; i < n; ++i) {
    std::vector<Eigen::Vector4d> next = slice_points(sweep, sweep.t[i]);
    // Depth-first bisection of [t_{i-1}, t_i] while neighbouring slices are far apart.
    struct Node {
      double t0, t1;
      std::vector<Eigen::Vector4d> p1;
      int depth;
    };
    std::vector<Node> stack;
    stack.push_back({sweep.t[i - 1], sweep.t[i], next, 0});
    std::vector<Eigen::Vector4d> left = prev;
    while (!stack.empty()) {
      Node node = std::move(stack.back());
      stack.pop_back();
      if (node.depth < kRefineDepth && max_displacement(left, node.p1) > kRefineDisplacement) {
        double tm = 0.5 * (node.t0 + node.t1);
        std::vector<Eigen::Vector4d> pm = slice_points(sweep, tm);
        stack.push_back({tm, node.t1, node.p1, node.depth + 1});
        stack.push_back({node.t0, tm, std::move(pm), node.depth + 1});
        continue;
      }
      bool grid_point = node.t1 == sweep.t[i];
      rep.t.push_back(node.t1);
      rep.areas.push_back(grid_point ? area_at(i, node.t1, node.p1)
                                     : checked_area(sweep, node.p1, i, node.t1));
      left = std::move(node.p1);
    }
    prev = std::move(next);
  }
  auto it = std::max_element(rep.areas.begin(), rep.areas.end());
  rep.l_value = *it;
  rep.argmax_t = rep.t[it - rep.areas.begin()];
  rep.evaluations = 1;
  return rep;
}

void WidthOptions::validate() const {
  if (budget < 1) fail(ErrorCode::Config, "width budget must be at least 1");
  if (!(initial_step > 0.0 && initial_step <= 1.0)) {
    fail(ErrorCode::Config, "initial_step must be in (0, 1]");
  }
  if (!(min_step > 0.0)) fail(ErrorCode::Config, "min_step must be positive");
  if (n_t < 3) fail(ErrorCode::Config, "n_t must be at least 3");
  if (mesh_level < 0 || mesh_level > 6) fail(ErrorCode::Config, "mesh level must be in 0..6");
}

WidthReport optimize_width_upper(const AmbientModel& metric, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, const WidthOptions& options) {
  options.validate();
  if (lower.size() != kSweepParameters || upper.size() != kSweepParameters ||
      (upper - lower).minCoeff() < 0.0 || lower.maxCoeff() > 0.0 || upper.minCoeff() < 0.0) {
    fail(ErrorCode::InvalidInput, "parameter bounds must have 12 entries and contain 0");
  }
  SweepOut sweep = standard_sweepout(metric, options.n_t, options.mesh_level);
  WidthReport best = evaluate_L(sweep);
  int evaluations = 1;
  std::vector<WidthTraceRow> trace{{1, best.params, best.l_value}};

  std::mt19937_64 rng(options.seed);
  std::vector<int> order(kSweepParameters);
  for (int i = 0; i < kSweepParameters; ++i) order[i] = i;
  const Eigen::VectorXd range = upper - lower;
  double step = options.initial_step;

  while (evaluations < options.budget && step >= options.min_step) {
    for (int i = kSweepParameters - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<int>(rng() % static_cast<unsigned long long>(i + 1))]);
    }
    bool improved = false;
    for (int c : order) {
      if (evaluations >= options.budget) break;
      for (double sign : {1.0, -1.0}) {
        if (evaluations >= options.budget) break;
        Eigen::VectorXd cand = best.params;
        cand(c) = std::clamp(cand(c) + sign * step * range(c), lower(c), upper(c));
        if (cand(c) == best.params(c)) continue;
        sweep.params = cand;
        ++evaluations;
        double value = std::numeric_limits<double>::infinity();
        WidthReport rep;
        try {
          rep = evaluate_L(sweep);
          value = rep.l_value;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateMesh) throw;
        }
        if (value < best.l_value) {
          best = std::move(rep);
          improved = true;
        }
        trace.push_back({evaluations, best.params, best.l_value});
        if (improved) break;
      }
    }
    if (!improved) step *= 0.5;
  }
  best.evaluations = evaluations;
  best.trace = std::move(trace);
  best.metric = metric.description();
  return best;
}

void write_width_trace_csv(const std::filesystem::path& path, const WidthReport& report) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string());
  out << "iteration";
  for (int i = 0; i < kSweepParameters; ++i) out << ",p" << i;
  out << ",L\n";
  for (const auto& row : report.trace) {
    out << row.iteration;
    for (int i = 0; i < row.params.size(); ++i) out << ',' << format_double(row.params(i));
    out << ',' << format_double(row.l_value) << '\n';
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace sphereflow
