#include "sphereflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "sphereflow/rigidity.hpp"

namespace sphereflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using FitMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxCoords,
                             kMaxCoords + 2>;
using NormalMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                                kMaxCoords + 2, kMaxCoords + 2>;
using NormalVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxCoords + 2, 1>;

double mass_norm(const Eigen::VectorXd& mass, const Eigen::VectorXd& u) {
  return std::sqrt(u.dot(mass.cwiseProduct(u)));
}

void push_sample(Trajectory& tr, long long tick, const NormalSection& u,
                 const Eigen::VectorXd& mass) {
  tr.ticks.push_back(tick);
  tr.times.push_back(static_cast<double>(tick) * tr.step);
  tr.states.push_back(u);
  tr.area.push_back(kNaN);
  tr.f_value.push_back(kNaN);
  tr.sup_h.push_back(kNaN);
  tr.l2_norm.push_back(mass_norm(mass, u.values));
  tr.sup_norm.push_back(u.sup_norm());
}

double max_abs_diff(const NormalSection& a, const NormalSection& b) {
  return (a.values - b.values).cwiseAbs().maxCoeff();
}

/// Sup over shared ticks of |a - b|_inf; `scale` maps ticks of b onto ticks of a.
double trajectory_difference(const Trajectory& a, const Trajectory& b, long long scale,
                             int* shared = nullptr) {
  double diff = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b.ticks[i] % scale != 0) continue;
    long j = a.index_of_tick(b.ticks[i] / scale);
    if (j < 0) continue;
    diff = std::max(diff, max_abs_diff(a.states[j], b.states[i]));
    ++count;
  }
  if (shared) *shared = count;
  return diff;
}

}  // namespace

// ---------------------------------------------------------------------------

LinearParabolicProblem laplacian_problem(const ImmersedSurface& surface, int rank) {
  if (rank < 1) fail(ErrorCode::InvalidInput, "rank must be positive");
  ScalarOperators ops = scalar_operators(surface);
  LinearParabolicProblem p;
  p.rank = rank;
  const int nv = surface.num_vertices();
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < ops.stiffness.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(ops.stiffness, c); it; ++it) {
      for (int a = 0; a < rank; ++a) {
        trip.emplace_back(it.row() * rank + a, it.col() * rank + a, it.value());
      }
    }
  }
  p.stiffness.resize(nv * rank, nv * rank);
  p.stiffness.setFromTriplets(trip.begin(), trip.end());
  p.mass.resize(nv * rank);
  for (int v = 0; v < nv; ++v) p.mass.segment(v * rank, rank).setConstant(ops.mass(v));
  return p;
}

LinearParabolicProblem jacobi_problem(const JacobiMatrix& jacobi) {
  LinearParabolicProblem p;
  p.rank = jacobi.rank;
  p.stiffness = jacobi.stiffness;
  p.mass = jacobi.mass;
  return p;
}

Trajectory solve_cauchy(const LinearParabolicProblem& problem, const NormalSection& u0,
                        const CauchyOptions& options) {
  const int k = problem.rank;
  const int nv = problem.num_vertices();
  const Eigen::Index n = problem.mass.size();
  if (problem.stiffness.rows() != n || problem.stiffness.cols() != n) {
    fail(ErrorCode::InvalidInput, "stiffness and mass sizes do not match");
  }
  if (u0.rank != k || u0.values.size() != n) {
    fail(ErrorCode::InvalidInput, "initial section does not match the problem");
  }
  if (!(options.step > 0.0) || !(options.horizon > 0.0) || options.record_every < 1 ||
      !(options.theta >= 0.0 && options.theta <= 1.0)) {
    fail(ErrorCode::Config, "invalid Cauchy options");
  }
  if (!(problem.ellipticity > 0.0)) fail(ErrorCode::InvalidInput, "ellipticity must be positive");

  auto diffusion = [&](int v, double t) {
    return problem.diffusion ? problem.diffusion(v, t) : 1.0;
  };
  for (double t : {0.0, 0.5 * options.horizon, options.horizon}) {
    for (int v = 0; v < nv; ++v) {
      double a = diffusion(v, t);
      if (!(a >= problem.ellipticity)) {
        std::ostringstream os;
        os << "ellipticity violated at vertex " << v << ", t = " << t << ": a = " << a;
        fail(ErrorCode::InvalidInput, os.str());
      }
      double c = problem.potential ? problem.potential(v, t).cwiseAbs().maxCoeff() : 0.0;
      if (std::abs(a) > problem.bound || c > problem.bound) {
        fail(ErrorCode::InvalidInput, "coefficient bound exceeded at vertex " + std::to_string(v));
      }
    }
  }

  const double h = options.step;
  const double theta = options.theta;
  const Eigen::VectorXd& M = problem.mass;

  // M L_t U = -D_a K U + M C U (D_a and M are diagonal and commute).
  auto operator_at = [&](double t) {
    Eigen::VectorXd a(n);
    for (int v = 0; v < nv; ++v) a.segment(v * k, k).setConstant(diffusion(v, t));
    SparseMatrix op = -(a.asDiagonal() * problem.stiffness);
    if (problem.potential) {
      std::vector<Eigen::Triplet<double>> trip;
      for (int v = 0; v < nv; ++v) {
        Eigen::MatrixXd c = problem.potential(v, t);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j)
            if (c(i, j) != 0.0) trip.emplace_back(v * k + i, v * k + j, M(v * k + i) * c(i, j));
      }
      SparseMatrix pot(n, n);
      pot.setFromTriplets(trip.begin(), trip.end());
      op += pot;
    }
    return op;
  };
  auto source_at = [&](double t) -> Eigen::VectorXd {
    if (!problem.source) return Eigen::VectorXd::Zero(n);
    Eigen::VectorXd f = problem.source(t);
    if (f.size() != n) fail(ErrorCode::InvalidInput, "source has the wrong size");
    return f;
  };
  SparseMatrix mass_matrix(n, n);
  mass_matrix.setIdentity();
  mass_matrix = M.asDiagonal() * mass_matrix;

  Trajectory tr;
  tr.rank = k;
  tr.step = h;
  const long long steps = std::llround(options.horizon / h);
  NormalSection u = u0;
  push_sample(tr, 0, u, M);

  Eigen::SparseLU<SparseMatrix> lu;
  SparseMatrix op_now = operator_at(0.0);
  SparseMatrix system;
  bool factored = false;
  for (long long i = 0; i < steps; ++i) {
    double t0 = static_cast<double>(i) * h;
    double t1 = static_cast<double>(i + 1) * h;
    SparseMatrix op_next = problem.time_independent ? op_now : operator_at(t1);
    if (!factored || !problem.time_independent) {
      system = mass_matrix - h * theta * op_next;
      system.makeCompressed();
      lu.compute(system);
      if (lu.info() != Eigen::Success) {
        fail(ErrorCode::SolverFailure, "factorization failed at step " + std::to_string(i));
      }
      factored = true;
    }
    Eigen::VectorXd rhs = M.cwiseProduct(u.values) + h * (1.0 - theta) * (op_now * u.values) +
                          h * M.cwiseProduct(theta * source_at(t1) + (1.0 - theta) * source_at(t0));
    Eigen::VectorXd next = lu.solve(rhs);
    double res = (system * next - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (lu.info() != Eigen::Success || !(res <= options.tolerance)) {
      std::ostringstream os;
      os << "linear solve failed at step " << i << " (relative residual " << res << ")";
      fail(ErrorCode::SolverFailure, os.str());
    }
    u.values = std::move(next);
    op_now = std::move(op_next);
    if ((i + 1) % options.record_every == 0 || i + 1 == steps) push_sample(tr, i + 1, u, M);
  }
  return tr;
}

// ---------------------------------------------------------------------------

const char* to_string(Scheme s) {
  return s == Scheme::Explicit ? "explicit" : "semi-implicit";
}

void FlowConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::Config, "flow config: " + what); };
  if (!(step > 0.0)) bad("step must be positive");
  if (!(horizon > 0.0)) bad("horizon must be positive");
  if (!(theta >= 0.0 && theta <= 1.0)) bad("theta must lie in [0, 1]");
  if (!(blow_up_threshold > 0.0)) bad("blow-up threshold must be positive");
  if (!(gauge_margin > 0.0 && gauge_margin < kFocalRadius)) bad("gauge margin out of range");
  if (record_every < 1) bad("record_every must be at least 1");
  if (!(sup_norm_cap >= 0.0)) bad("sup-norm cap must be non-negative");
}

struct BundleFlow::Impl {
  ImmersedSurface base;
  NormalFrame frame;
  FlowConfig config;
  JacobiMatrix jacobi;
  double scale = 0.0;
  // Per vertex: weights (2-ring size x 2) that map chords of the graph to its
  // differential along the base tangent coordinates. They are the linear rows
  // of the least-squares inverse of a quadratic fit, so the curvature of the
  // graph does not tilt the recovered tangent plane.
  std::vector<Eigen::MatrixX2d> ring_weights;
  Eigen::SimplicialLDLT<SparseMatrix> implicit;

  Impl(ImmersedSurface b, NormalFrame f, FlowConfig c)
      : base(std::move(b)), frame(std::move(f)), config(c) {}
};

BundleFlow::BundleFlow(ImmersedSurface base, NormalFrame frame, FlowConfig config)
    : impl_(std::make_unique<Impl>(std::move(base), std::move(frame), config)) {
  config.validate();
  Impl& s = *impl_;
  if (s.frame.num_vertices() != s.base.num_vertices()) {
    fail(ErrorCode::InvalidInput, "frame does not match base");
  }
  s.jacobi = assemble_jacobi(s.base, s.frame);
  VertexGeometry geo = vertex_geometry(s.base);
  s.scale = geo.mean_edge;
  const AmbientModel& m = s.base.ambient();
  const int nv = s.base.num_vertices();
  s.ring_weights.resize(nv);
  for (int v = 0; v < nv; ++v) {
    const Vec& p = s.base.position(v);
    const auto& ring = s.base.mesh().two_ring(v);
    Eigen::MatrixXd design(ring.size(), 5);
    for (std::size_t j = 0; j < ring.size(); ++j) {
      Vec z = m.is_spherical() ? log_map(m, p, s.base.position(ring[j]))
                               : Vec(s.base.position(ring[j]) - p);
      double a = s.frame.tangents[v].col(0).dot(z);
      double b = s.frame.tangents[v].col(1).dot(z);
      design.row(j) << a, b, 0.5 * a * a, a * b, 0.5 * b * b;
    }
    Eigen::MatrixXd pinv = design.completeOrthogonalDecomposition().pseudoInverse();
    s.ring_weights[v] = pinv.topRows(2).transpose();
  }
  if (config.scheme == Scheme::Explicit) {
    double limit = 0.25 * s.scale * s.scale;
    if (config.step > limit) {
      std::ostringstream os;
      os << "explicit step " << config.step << " exceeds the stability limit " << limit;
      fail(ErrorCode::Config, os.str());
    }
  } else {
    SparseMatrix a = s.jacobi.stiffness * (config.step * config.theta);
    for (Eigen::Index i = 0; i < a.rows(); ++i) a.coeffRef(i, i) += s.jacobi.mass(i);
    s.implicit.compute(a);
    if (s.implicit.info() != Eigen::Success) {
      fail(ErrorCode::SolverFailure, "factorization of the implicit flow operator failed");
    }
  }
}

BundleFlow::~BundleFlow() = default;
BundleFlow::BundleFlow(BundleFlow&&) noexcept = default;
BundleFlow& BundleFlow::operator=(BundleFlow&&) noexcept = default;

const ImmersedSurface& BundleFlow::base() const { return impl_->base; }
const NormalFrame& BundleFlow::frame() const { return impl_->frame; }
const FlowConfig& BundleFlow::config() const { return impl_->config; }
const JacobiMatrix& BundleFlow::jacobi() const { return impl_->jacobi; }
double BundleFlow::mesh_scale() const { return impl_->scale; }

BundleFlow::Velocity BundleFlow::velocity(const NormalSection& u) const {
  const Impl& s = *impl_;
  const AmbientModel& m = s.base.ambient();
  const int k = s.frame.rank;
  const int d = s.base.coords();
  ImmersedSurface graph = graph_immersion(s.base, s.frame, u, s.config.gauge_margin);
  VertexGeometry geo = vertex_geometry(graph);
  std::vector<AmbientVector> hv = mean_curvature_vector_raw(graph, geo);

  Velocity out;
  out.value = NormalSection(k, s.base.num_vertices());
  FitMat a(d, 2 + k);
  for (int v = 0; v < s.base.num_vertices(); ++v) {
    const Vec& y = graph.position(v);
    const Vec& p = s.base.position(v);
    const auto& ring = s.base.mesh().two_ring(v);
    const Eigen::MatrixX2d& wts = s.ring_weights[v];
    SmallMat dmap = SmallMat::Zero(d, 2);
    for (std::size_t j = 0; j < ring.size(); ++j) {
      Vec z = m.tangent_part(y, graph.position(ring[j]) - y);
      dmap.col(0) += z * wts(j, 0);
      dmap.col(1) += z * wts(j, 1);
    }
    a.leftCols(2) = dmap;
    Vec w = m.tangent_part(p, s.frame.normals[v] * u.at(v));
    for (int c = 0; c < k; ++c) {
      a.col(2 + c) = exp_differential(m, p, w, s.frame.normals[v].col(c));
    }
    NormalMat normal = a.transpose() * a;
    NormalVec rhs = a.transpose() * (2.0 * hv[v]);
    NormalVec coef = normal.ldlt().solve(rhs);
    out.value.at(v) = coef.tail(k);
    out.sup_h = std::max(out.sup_h, hv[v].norm());
  }
  return out;
}

NormalSection BundleFlow::step(const NormalSection& u) const {
  const Impl& s = *impl_;
  Velocity vel = velocity(u);
  if (vel.sup_h * s.scale > s.config.blow_up_threshold) {
    std::ostringstream os;
    os << "curvature unresolved at mesh scale: sup |H| = " << vel.sup_h;
    fail(ErrorCode::BlowUp, os.str());
  }
  const double h = s.config.step;
  NormalSection next(u.rank, u.num_vertices());
  if (s.config.scheme == Scheme::Explicit) {
    next.values = u.values + h * vel.value.values;
  } else {
    Eigen::VectorXd rhs = s.jacobi.mass.cwiseProduct(u.values + h * vel.value.values) +
                          (h * s.config.theta) * (s.jacobi.stiffness * u.values);
    next.values = s.implicit.solve(rhs);
  }
  return next;
}

Trajectory BundleFlow::run(const NormalSection& u0, long long start_tick,
                           long long end_tick) const {
  return run(u0, start_tick, end_tick, impl_->config.sup_norm_cap);
}

Trajectory BundleFlow::run(const NormalSection& u0) const {
  return run(u0, 0, std::llround(impl_->config.horizon / impl_->config.step));
}

Trajectory BundleFlow::run(const NormalSection& u0, long long start_tick, long long end_tick,
                           double sup_norm_cap) const {
  const Impl& s = *impl_;
  if (u0.rank != s.frame.rank || u0.num_vertices() != s.base.num_vertices()) {
    fail(ErrorCode::InvalidInput, "initial section does not match the base");
  }
  if (end_tick < start_tick) fail(ErrorCode::InvalidInput, "end before start");
  Trajectory tr;
  tr.rank = s.frame.rank;
  tr.step = s.config.step;
  const Eigen::VectorXd& mass = s.jacobi.mass;
  NormalSection u = u0;
  push_sample(tr, start_tick, u, mass);
  long long tick = start_tick;
  while (tick < end_tick) {
    try {
      u = step(u);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::BlowUp: tr.termination = Termination::BlowUp; break;
        case ErrorCode::GaugeLoss: tr.termination = Termination::GaugeLoss; break;
        case ErrorCode::DegenerateMesh: tr.termination = Termination::DegenerateMesh; break;
        default: throw;
      }
      tr.message = e.what();
      break;
    }
    ++tick;
    bool capped = sup_norm_cap > 0.0 && u.sup_norm() >= sup_norm_cap;
    if (tick % s.config.record_every == 0 || tick == end_tick || capped) {
      push_sample(tr, tick, u, mass);
    }
    if (capped) {
      tr.termination = Termination::SupNormCap;
      break;
    }
  }
  if (tr.ticks.back() != tick) push_sample(tr, tick, u, mass);
  if (s.config.diagnostics) diagnose(tr);
  return tr;
}

void BundleFlow::diagnose(Trajectory& tr) const {
  const Impl& s = *impl_;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    try {
      ImmersedSurface graph = graph_immersion(s.base, s.frame, tr.states[i], s.config.gauge_margin);
      tr.area[i] = area(graph);
      tr.f_value[i] = f_functional(graph);
      double sup = 0.0;
      for (const auto& hv : mean_curvature_vector(graph)) sup = std::max(sup, hv.norm());
      tr.sup_h[i] = sup;
    } catch (const Error&) {
      // Left as NaN: the state that ended the run may not be a valid graph.
    }
  }
}

NormalSection step_bundle_mcf(const ImmersedSurface& base, const NormalFrame& frame,
                              const NormalSection& u, double h) {
  FlowConfig config;
  config.step = h;
  return BundleFlow(base, frame, config).step(u);
}

Trajectory run_mcf(const ImmersedSurface& base, const NormalFrame& frame,
                   const NormalSection& u0, const FlowConfig& config) {
  return BundleFlow(base, frame, config).run(u0);
}

// ---------------------------------------------------------------------------

ExponentFit fit_decay_exponent(const std::vector<double>& t, const std::vector<double>& values,
                               double t_lo, double t_hi) {
  if (t.size() != values.size()) fail(ErrorCode::InvalidInput, "time and value sizes differ");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || t[i] > t_hi) continue;
    if (!(values[i] > 0.0)) {
      std::ostringstream os;
      os << "non-positive norm " << values[i] << " at t = " << t[i];
      fail(ErrorCode::Domain, os.str());
    }
    xs.push_back(t[i]);
    ys.push_back(std::log(values[i]));
  }
  const int n = static_cast<int>(xs.size());
  if (n < 10) {
    fail(ErrorCode::InvalidInput,
         "exponent fit needs at least 10 samples in the window, got " + std::to_string(n));
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorCode::InvalidInput, "exponent fit window has a single time");
  ExponentFit fit;
  fit.samples = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = ys[i] - fit.intercept - fit.slope * xs[i];
    sse += r * r;
  }
  fit.stderr_slope = std::sqrt(sse / (n - 2) / sxx);
  return fit;
}

ExponentFit fit_decay_exponent(const Trajectory& trajectory, NormSelector norm, double t_lo,
                               double t_hi) {
  return fit_decay_exponent(trajectory.times,
                            norm == NormSelector::Sup ? trajectory.sup_norm : trajectory.l2_norm,
                            t_lo, t_hi);
}

// ---------------------------------------------------------------------------

void LadderConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::Config, "ladder config: " + what); };
  if (!(delta_a > 0.0)) bad("delta_a must be positive");
  if (!(cap > 0.0 && cap < kFocalRadius)) bad("cap must lie in (0, pi/2)");
  if (!(start_amplitude > 0.0 && start_amplitude < cap)) bad("start amplitude must lie in (0, cap)");
  if (!(tolerance > 0.0)) bad("tolerance must be positive");
  if (max_rungs < 2) bad("need at least two rungs");
  if (!(fit_window > 0.0)) bad("fit window must be positive");
  if (!(remainder_low > 0.0 && remainder_low < remainder_high)) bad("remainder band is empty");
  if (!(eigen_tolerance > 0.0)) bad("eigen tolerance must be positive");
}

AncientSolution construct_ancient(const ImmersedSurface& base, const NormalFrame& frame,
                                  const NormalSection& v, const FlowConfig& config,
                                  const LadderConfig& ladder) {
  ladder.validate();
  FlowConfig quiet = config;
  quiet.diagnostics = false;
  BundleFlow flow(base, frame, quiet);
  const JacobiMatrix& jac = flow.jacobi();
  if (v.rank != jac.rank || v.values.size() != jac.size()) {
    fail(ErrorCode::InvalidInput, "eigensection does not match the base");
  }

  AncientSolution out;
  ConvergenceReport& rep = out.report;
  const Eigen::VectorXd& mass = jac.mass;
  double vnorm = mass_norm(mass, v.values);
  if (!(vnorm > 0.0)) fail(ErrorCode::InvalidInput, "eigensection is zero");
  Eigen::VectorXd sv = jac.stiffness * v.values;
  double lambda0 = v.values.dot(sv) / (vnorm * vnorm);
  Eigen::VectorXd r = sv - lambda0 * mass.cwiseProduct(v.values);
  rep.lambda0 = lambda0;
  rep.eigen_residual = std::sqrt(r.dot(r.cwiseQuotient(mass))) / (vnorm * std::max(1.0, std::abs(lambda0)));
  if (!(rep.eigen_residual <= ladder.eigen_tolerance)) {
    std::ostringstream os;
    os << "V is not an eigensection: relative residual " << rep.eigen_residual;
    fail(ErrorCode::InvalidInput, os.str());
  }
  if (!(lambda0 < 0.0)) fail(ErrorCode::InvalidInput, "ancient construction needs lambda0 < 0");

  const double h = config.step;
  const double growth = -lambda0;
  const double vsup = v.sup_norm();
  const long long tick0 = std::llround(std::log(ladder.start_amplitude / vsup) / growth / h);
  const long long rung_ticks = std::max<long long>(1, std::llround(ladder.delta_a / h));
  auto initial = [&](long long tick) {
    NormalSection u = v;
    u.values *= std::exp(growth * static_cast<double>(tick) * h);
    return u;
  };

  Trajectory prev = flow.run(initial(tick0), tick0, tick0 + std::llround(config.horizon / h),
                             ladder.cap);
  rep.rung_starts.push_back(static_cast<double>(tick0) * h);
  const long long ceiling = prev.ticks.back();
  rep.ceiling = static_cast<double>(ceiling) * h;
  if (prev.termination != Termination::SupNormCap) {
    rep.message = std::string("first rung ended before the cap: ") + to_string(prev.termination);
  }
  for (int k = 1; k < ladder.max_rungs; ++k) {
    long long start = tick0 - k * rung_ticks;
    Trajectory cur = flow.run(initial(start), start, ceiling, 0.0);
    rep.rung_starts.push_back(static_cast<double>(start) * h);
    double diff = trajectory_difference(cur, prev, 1);
    rep.differences.push_back(diff);
    prev = std::move(cur);
    if (diff < ladder.tolerance) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged && rep.message.empty()) {
    rep.message = "ladder did not converge within " + std::to_string(ladder.max_rungs) + " rungs";
  }

  Trajectory& tr = prev;
  flow.diagnose(tr);
  const double a_k = tr.times.front();
  try {
    rep.leading = fit_decay_exponent(tr, NormSelector::Sup, a_k, a_k + ladder.fit_window);
  } catch (const Error& e) {
    rep.message += std::string(rep.message.empty() ? "" : "; ") + "leading fit: " + e.what();
  }
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    double t = tr.times[i];
    Eigen::VectorXd z = tr.states[i].values - std::exp(growth * t) * v.values;
    rep.remainder_times.push_back(t);
    rep.remainder_norms.push_back(z.cwiseAbs().maxCoeff());
    if (tr.sup_norm[i] >= ladder.remainder_low && tr.sup_norm[i] <= ladder.remainder_high) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  try {
    rep.remainder = fit_decay_exponent(rep.remainder_times, rep.remainder_norms, lo, hi);
  } catch (const Error& e) {
    rep.message += std::string(rep.message.empty() ? "" : "; ") + "remainder fit: " + e.what();
  }
  out.trajectory = std::move(tr);
  return out;
}

// ---------------------------------------------------------------------------

ExtensionReport check_extension_uniqueness(const ImmersedSurface& base, const NormalFrame& frame,
                                           const NormalSection& u0, const FlowConfig& config,
                                           double t_split) {
  FlowConfig quiet = config;
  quiet.diagnostics = false;
  BundleFlow flow(base, frame, quiet);
  const double h = config.step;
  const long long end = std::llround(config.horizon / h);
  const long long split = std::llround(t_split / h);
  if (split <= 0 || split >= end) fail(ErrorCode::InvalidInput, "t_split must lie inside (0, T)");
  Trajectory full = flow.run(u0, 0, end);
  long idx = full.index_of_tick(split);
  if (idx < 0) {
    fail(ErrorCode::InvalidInput, "t_split is not a recorded sample of the trajectory");
  }
  const NormalSection& mid = full.states[idx];

  ExtensionReport rep;
  Trajectory again = flow.run(mid, split, end);
  rep.restart_difference = trajectory_difference(full, again, 1, &rep.overlap_samples);

  FlowConfig fine = quiet;
  fine.step = 0.5 * h;
  fine.record_every = 2 * config.record_every;
  BundleFlow fine_flow(base, frame, fine);
  Trajectory refined = fine_flow.run(mid, 2 * split, 2 * end);
  rep.refined_difference = trajectory_difference(full, refined, 2);
  return rep;
}

}  // namespace sphereflow
