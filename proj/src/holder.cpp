#include "sphereflow/holder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace sphereflow {

namespace {

Eigen::MatrixXd nearest_orthogonal(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::Domain, "Hoelder exponent must lie in (0, 1)");
}

// Per-time fields with a fixed block width per vertex.
using Samples = std::vector<Eigen::VectorXd>;

double sup_blocks(const Samples& f, int width) {
  double s = 0.0;
  for (const auto& x : f) {
    const Eigen::Index nv = x.size() / width;
    for (Eigen::Index v = 0; v < nv; ++v) s = std::max(s, x.segment(v * width, width).norm());
  }
  return s;
}

// Index separations 1, 2, 4, ... and the two end points.
std::vector<std::pair<int, int>> time_pairs(int n) {
  std::vector<std::pair<int, int>> out;
  for (int sep = 1; sep < n; sep *= 2) {
    for (int i = 0; i + sep < n; ++i) out.emplace_back(i, i + sep);
  }
  if (n > 1 && ((n - 1) & (n - 2)) != 0) out.emplace_back(0, n - 1);
  return out;
}

double time_seminorm(const Samples& f, const std::vector<double>& t, int width, double beta) {
  double s = 0.0;
  for (auto [i, j] : time_pairs(static_cast<int>(f.size()))) {
    double dt = std::pow(std::abs(t[j] - t[i]), beta);
    if (!(dt > 0.0)) continue;
    const Eigen::Index nv = f[i].size() / width;
    for (Eigen::Index v = 0; v < nv; ++v) {
      double d = (f[j].segment(v * width, width) - f[i].segment(v * width, width)).norm();
      s = std::max(s, d / dt);
    }
  }
  return s;
}

}  // namespace

struct HolderGrid::Impl {
  ImmersedSurface base;
  NormalFrame frame;
  int rank = 0;
  struct Pair {
    int v, w;
    double dist;
    Eigen::MatrixXd normal;   // frame coords at w -> v
    Eigen::Matrix2d tangent;  // tangent coords at w -> v
  };
  std::vector<Pair> pairs;
  // 1-ring gradient stencils: neighbors, transports and LS weights (m x 2).
  std::vector<std::vector<int>> ring;
  std::vector<std::vector<Eigen::MatrixXd>> ring_transport;
  std::vector<Eigen::MatrixXd> grad_weights;
  SparseMatrix stiffness;
  Eigen::VectorXd mass;  // per vertex

  Impl(const ImmersedSurface& b, const NormalFrame& f) : base(b), frame(f), rank(f.rank) {
    const int nv = base.num_vertices();
    if (frame.num_vertices() != nv || rank < 1) {
      fail(ErrorCode::InvalidInput, "frame does not match base");
    }
    const AmbientModel& m = base.ambient();
    const TriangleMesh& mesh = base.mesh();

    auto tangent_transport = [&](int v, int w) {
      Eigen::Matrix2d r;
      for (int j = 0; j < 2; ++j) {
        Vec moved = parallel_transport(m, base.position(w), base.position(v),
                                       frame.tangents[w].col(j));
        for (int i = 0; i < 2; ++i) r(i, j) = frame.tangents[v].col(i).dot(moved);
      }
      return Eigen::Matrix2d(nearest_orthogonal(r));
    };

    for (int v = 0; v < nv; ++v) {
      for (int w : mesh.two_ring(v)) {
        if (w <= v) continue;
        Pair p;
        p.v = v;
        p.w = w;
        p.dist = m.distance(base.position(v), base.position(w));
        p.normal = frame_transport(base, frame, v, w);
        p.tangent = tangent_transport(v, w);
        pairs.push_back(std::move(p));
      }
    }

    ring.resize(nv);
    ring_transport.resize(nv);
    grad_weights.resize(nv);
    for (int v = 0; v < nv; ++v) {
      ring[v] = mesh.one_ring(v);
      const int deg = static_cast<int>(ring[v].size());
      Eigen::MatrixXd xi(2, deg);
      for (int c = 0; c < deg; ++c) {
        int w = ring[v][c];
        Vec l = log_map(m, base.position(v), base.position(w));
        xi.col(c) = frame.tangents[v].transpose() * l;
        ring_transport[v].push_back(frame_transport(base, frame, v, w));
      }
      Eigen::Matrix2d gram = xi * xi.transpose();
      grad_weights[v] = xi.transpose() * gram.inverse();
    }

    VertexGeometry geo = vertex_geometry(base);
    std::vector<Eigen::Triplet<double>> trip;
    const int k = rank;
    for (int e = 0; e < mesh.num_edges(); ++e) {
      const Edge& edge = mesh.edges()[e];
      double w = geo.cot_weight[e];
      Eigen::MatrixXd t = frame_transport(base, frame, edge.a, edge.b);
      for (int i = 0; i < k; ++i) {
        trip.emplace_back(edge.a * k + i, edge.a * k + i, w);
        trip.emplace_back(edge.b * k + i, edge.b * k + i, w);
        for (int j = 0; j < k; ++j) {
          trip.emplace_back(edge.a * k + i, edge.b * k + j, -w * t(i, j));
          trip.emplace_back(edge.b * k + j, edge.a * k + i, -w * t(i, j));
        }
      }
    }
    stiffness.resize(static_cast<Eigen::Index>(nv) * k, static_cast<Eigen::Index>(nv) * k);
    stiffness.setFromTriplets(trip.begin(), trip.end());
    mass = Eigen::Map<const Eigen::VectorXd>(geo.dual_area.data(), nv);
  }

  // Gradient per vertex as a column-major k x 2 block.
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const {
    const int k = rank;
    const int nv = base.num_vertices();
    Eigen::VectorXd g(static_cast<Eigen::Index>(nv) * 2 * k);
    for (int v = 0; v < nv; ++v) {
      const int deg = static_cast<int>(ring[v].size());
      Eigen::MatrixXd d(k, deg);
      for (int c = 0; c < deg; ++c) {
        int w = ring[v][c];
        d.col(c) = ring_transport[v][c] * u.segment(static_cast<Eigen::Index>(w) * k, k) -
                   u.segment(static_cast<Eigen::Index>(v) * k, k);
      }
      Eigen::MatrixXd gv = d * grad_weights[v];
      g.segment(static_cast<Eigen::Index>(v) * 2 * k, 2 * k) =
          Eigen::Map<const Eigen::VectorXd>(gv.data(), 2 * k);
    }
    return g;
  }

  Eigen::VectorXd laplacian(const Eigen::VectorXd& u) const {
    Eigen::VectorXd ku = stiffness * u;
    Eigen::VectorXd out(ku.size());
    for (Eigen::Index i = 0; i < ku.size(); ++i) out(i) = -ku(i) / mass(i / rank);
    return out;
  }

  double space_seminorm(const Samples& f, double beta) const {
    const int k = rank;
    double s = 0.0;
    for (const auto& x : f) {
      for (const Pair& p : pairs) {
        double d = (x.segment(static_cast<Eigen::Index>(p.v) * k, k) -
                    p.normal * x.segment(static_cast<Eigen::Index>(p.w) * k, k))
                       .norm();
        s = std::max(s, d / std::pow(p.dist, beta));
      }
    }
    return s;
  }

  double space_seminorm_grad(const Samples& g, double beta) const {
    const int k = rank;
    double s = 0.0;
    for (const auto& x : g) {
      for (const Pair& p : pairs) {
        Eigen::Map<const Eigen::MatrixXd> gv(x.data() + static_cast<Eigen::Index>(p.v) * 2 * k, k, 2);
        Eigen::Map<const Eigen::MatrixXd> gw(x.data() + static_cast<Eigen::Index>(p.w) * 2 * k, k, 2);
        Eigen::MatrixXd moved = p.normal * gw * p.tangent.transpose();
        s = std::max(s, (gv - moved).norm() / std::pow(p.dist, beta));
      }
    }
    return s;
  }

  double l2_squared(const Eigen::VectorXd& u) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) s += mass(i / rank) * u(i) * u(i);
    return s;
  }
};

HolderGrid::HolderGrid(const ImmersedSurface& base, const NormalFrame& frame)
    : impl_(std::make_unique<Impl>(base, frame)) {}
HolderGrid::~HolderGrid() = default;
HolderGrid::HolderGrid(HolderGrid&&) noexcept = default;
HolderGrid& HolderGrid::operator=(HolderGrid&&) noexcept = default;

const ImmersedSurface& HolderGrid::base() const { return impl_->base; }
double HolderGrid::total_area() const { return impl_->mass.sum(); }

double HolderGrid::l2(const NormalSection& u) const {
  if (u.rank != impl_->rank || u.num_vertices() != impl_->base.num_vertices()) {
    fail(ErrorCode::InvalidInput, "section does not match the grid");
  }
  return std::sqrt(impl_->l2_squared(u.values));
}

HolderNorms HolderGrid::norms(const std::vector<double>& times,
                              const std::vector<NormalSection>& values, double alpha) const {
  check_alpha(alpha);
  const Impl& g = *impl_;
  const int k = g.rank;
  const std::size_t n = values.size();
  if (n == 0 || times.size() != n) fail(ErrorCode::InvalidInput, "empty or mismatched field samples");
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i].rank != k || values[i].num_vertices() != g.base.num_vertices()) {
      fail(ErrorCode::InvalidInput, "field sample does not match the grid");
    }
    if (i > 0 && !(times[i] > times[i - 1])) fail(ErrorCode::InvalidInput, "times must increase");
  }

  Samples u(n), grad(n), hess(n), dt(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = values[i].values;
    grad[i] = g.gradient(u[i]);
    hess[i] = g.laplacian(u[i]);
  }
  HolderNorms out;
  out.alpha = alpha;
  out.sup = sup_blocks(u, k);
  out.sup_grad = sup_blocks(grad, 2 * k);
  out.sup_hess = sup_blocks(hess, k);
  out.space_u = g.space_seminorm(u, alpha);
  out.space_grad = g.space_seminorm_grad(grad, alpha);
  out.space_hess = g.space_seminorm(hess, alpha);

  if (n == 1) {
    out.l2 = std::sqrt(g.l2_squared(u[0]));
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i == 0 ? 0 : i - 1;
    std::size_t hi = i + 1 == n ? i : i + 1;
    dt[i] = (u[hi] - u[lo]) / (times[hi] - times[lo]);
  }
  out.sup_dt = sup_blocks(dt, k);
  out.space_dt = g.space_seminorm(dt, alpha);
  out.time_u = time_seminorm(u, times, k, alpha / 2);
  out.time_u_half = time_seminorm(u, times, k, (1 + alpha) / 2);
  out.time_grad = time_seminorm(grad, times, 2 * k, (1 + alpha) / 2);
  out.time_grad_half = time_seminorm(grad, times, 2 * k, alpha / 2);
  out.time_hess = time_seminorm(hess, times, k, alpha / 2);
  out.time_dt = time_seminorm(dt, times, k, alpha / 2);

  double l2 = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    l2 += 0.5 * (times[i + 1] - times[i]) * (g.l2_squared(u[i]) + g.l2_squared(u[i + 1]));
  }
  out.l2 = std::sqrt(l2);
  return out;
}

HolderNorms HolderGrid::norms(const Trajectory& trajectory, double alpha) const {
  return norms(trajectory.times, trajectory.states, alpha);
}

HolderNorms HolderGrid::spatial_norms(const NormalSection& u, double alpha) const {
  return norms(std::vector<double>{0.0}, std::vector<NormalSection>{u}, alpha);
}

HolderNorms holder_norms(const ImmersedSurface& base, const NormalFrame& frame,
                         const Trajectory& trajectory, double alpha) {
  return HolderGrid(base, frame).norms(trajectory, alpha);
}

// ---------------------------------------------------------------------------

const char* to_string(SchauderCase c) {
  switch (c) {
    case SchauderCase::DecayingMode: return "decaying_mode";
    case SchauderCase::PeriodicForcing: return "periodic_forcing";
  }
  return "?";
}

SchauderTable schauder_ratio_experiment(const ImmersedSurface& surface, SchauderCase family,
                                        const std::vector<double>& horizons,
                                        const SchauderOptions& options) {
  if (horizons.empty()) fail(ErrorCode::InvalidInput, "no horizons given");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(horizons[i] > 0.0) || (i > 0 && !(horizons[i] > horizons[i - 1]))) {
      fail(ErrorCode::InvalidInput, "horizons must be positive and increasing");
    }
  }
  check_alpha(options.alpha);
  NormalFrame frame = normal_frame(surface);
  HolderGrid grid(surface, frame);
  const int k = frame.rank;
  const int nv = surface.num_vertices();

  // Degree-2 zonal harmonic 3z^2 - 1 on the reference sphere, first normal component.
  NormalSection mode(k, nv);
  for (int v = 0; v < nv; ++v) {
    double z = surface.mesh().reference()[v].z();
    mode.at(v)(0) = 3.0 * z * z - 1.0;
  }

  LinearParabolicProblem problem = laplacian_problem(surface, k);
  problem.potential = [k](int, double) { return Eigen::MatrixXd(-Eigen::MatrixXd::Identity(k, k)); };
  NormalSection u0(k, nv);
  auto forcing = [&](double t) -> Eigen::VectorXd {
    return std::sin(2.0 * std::numbers::pi * t) * mode.values;
  };
  if (family == SchauderCase::DecayingMode) {
    u0 = mode;
  } else {
    problem.source = forcing;
  }

  SchauderTable table;
  table.family = family;
  const double u0_norm = grid.spatial_norms(u0, options.alpha).norm_2_alpha();
  for (double horizon : horizons) {
    CauchyOptions co;
    co.step = options.step;
    co.theta = options.theta;
    co.horizon = horizon;
    Trajectory traj = solve_cauchy(problem, u0, co);
    SchauderRow row;
    row.horizon = horizon;
    HolderNorms un = grid.norms(traj, options.alpha);
    row.u_norm = un.norm_2_alpha();
    row.l2 = un.l2;
    row.u0_norm = u0_norm;
    if (family == SchauderCase::PeriodicForcing) {
      std::vector<NormalSection> f;
      f.reserve(traj.size());
      for (double t : traj.times) {
        NormalSection s(k, nv);
        s.values = forcing(t);
        f.push_back(std::move(s));
      }
      row.f_norm = grid.norms(traj.times, f, options.alpha).norm_0_alpha();
    }
    double denom = row.f_norm + row.u0_norm + row.l2;
    if (!(denom > 0.0)) fail(ErrorCode::Domain, "Schauder ratio has a vanishing denominator");
    row.ratio = row.u_norm / denom;
    table.rows.push_back(row);
  }
  double lo = table.rows.front().ratio, hi = lo;
  bool growth = table.rows.size() > 1;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    lo = std::min(lo, table.rows[i].ratio);
    hi = std::max(hi, table.rows[i].ratio);
    if (!(table.rows[i].ratio > table.rows[i - 1].ratio)) growth = false;
  }
  table.variation = hi / lo;
  table.monotone_growth = growth;
  return table;
}

// ---------------------------------------------------------------------------

InterpolationReport interpolation_check(const HolderGrid& grid,
                                        const std::vector<SectionField>& probes, int l,
                                        double alpha, int m, double beta,
                                        const std::vector<double>& epsilons) {
  if (l < 0 || l > 2 || m < 0 || m > 2) fail(ErrorCode::InvalidInput, "orders must lie in {0, 1, 2}");
  check_alpha(alpha);
  check_alpha(beta);
  if (!(l + alpha > m + beta)) {
    fail(ErrorCode::InvalidInput, "interpolation needs l + alpha > m + beta");
  }
  if (probes.empty()) fail(ErrorCode::InvalidInput, "no probe fields");

  InterpolationReport rep;
  rep.l = l;
  rep.alpha = alpha;
  rep.m = m;
  rep.beta = beta;
  rep.epsilons = epsilons;

  struct Sides {
    double lhs, semi, l2;
  };
  std::vector<Sides> sides;
  for (const SectionField& f : probes) {
    HolderNorms lo = grid.norms(f.times, f.values, beta);
    HolderNorms hi = grid.norms(f.times, f.values, alpha);
    Sides s{};
    s.lhs = m == 0 ? lo.norm_0_alpha() : m == 1 ? lo.norm_1_alpha() : lo.norm_2_alpha();
    s.semi = l == 0 ? hi.seminorm_0_alpha() : l == 1 ? hi.seminorm_1_alpha() : hi.seminorm_2_alpha();
    s.l2 = lo.l2;
    sides.push_back(s);
  }
  double previous = std::numeric_limits<double>::infinity();
  for (double eps : epsilons) {
    double c = 0.0;
    for (const Sides& s : sides) {
      double excess = s.lhs - eps * s.semi;
      if (excess <= 0.0) continue;
      c = s.l2 > 0.0 ? std::max(c, excess / s.l2) : std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(c)) rep.finite = false;
    rep.constants.push_back(c);
  }
  // Larger eps must not need a larger constant.
  std::vector<std::size_t> order(epsilons.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return epsilons[a] < epsilons[b]; });
  for (std::size_t i : order) {
    if (rep.constants[i] > previous) rep.nonincreasing = false;
    previous = rep.constants[i];
  }
  return rep;
}

}  // namespace sphereflow
