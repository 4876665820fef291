// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sphereflow/flow.hpp"
#include "sphereflow/holder.hpp"
#include "sphereflow/rigidity.hpp"
#include "sphereflow/scenario.hpp"
#include "sphereflow/width.hpp"

using namespace sphereflow;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr int kLevel = 4;
constexpr double kClusterRadius = 0.05;
constexpr double kSpectrumSeconds = 30.0;
constexpr double kLatitudeStep = 1e-4;
constexpr double kLatitudeRelError = 0.01;
constexpr double kBlowUpRelError = 0.02;
constexpr double kLatitudeSeconds = 60.0;
constexpr double kLadderTolerance = 1e-4;
constexpr double kLeadingRelError = 0.05;
constexpr double kRemainderFloor = 3.0;
constexpr double kRemainderRelError = 0.10;
constexpr double kAncientSeconds = 600.0;
constexpr int kPerturbedSurfaces = 50;
constexpr double kGaussBonnetTol = 1e-9;
constexpr double kSecondVariationRelError = 0.02;
constexpr int kSecondVariationSamples = 10;
constexpr double kSchauderVariation = 1.2;
constexpr double kWidthRelError = 0.01;
constexpr int kWidthRuns = 20;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs a criterion, turning an escaped exception into a FAIL line.
void criterion(int id, const char* name, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    auto [ok, detail] = body();
    report(id, name, ok, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

// Random section of degree <= 2 in the reference coordinates, one polynomial per component.
NormalSection random_polynomial(const ImmersedSurface& base, int rank, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  NormalSection u(rank, base.num_vertices());
  for (int a = 0; a < rank; ++a) {
    double c[10];
    for (double& x : c) x = coef(rng);
    for (int v = 0; v < base.num_vertices(); ++v) {
      const Eigen::Vector3d& p = base.mesh().reference()[v];
      u.at(v)(a) = c[0] + c[1] * p.x() + c[2] * p.y() + c[3] * p.z() + c[4] * p.x() * p.y() +
                   c[5] * p.y() * p.z() + c[6] * p.x() * p.z() + c[7] * p.x() * p.x() +
                   c[8] * p.y() * p.y() + c[9] * p.z() * p.z();
    }
  }
  return u;
}

NormalSection with_sup(NormalSection u, double sup) {
  u.values *= sup / u.values.cwiseAbs().maxCoeff();
  return u;
}

struct GronwallTally {
  int flows = 0;
  bool all = true;
  double worst = -std::numeric_limits<double>::infinity();

  void add(const Trajectory& tr, double eps) {
    GronwallSeries g = gronwall_monotonicity(tr, eps);
    ++flows;
    all = all && g.holds();
    worst = std::max(worst, g.max_excess);
  }
};

// Shared between criteria 2, 3 and 4.
GronwallTally gronwall;
std::vector<ImmersedSurface> suite;

std::pair<bool, std::string> spectrum_anchor() {
  MeshPtr mesh = build_icosphere(kLevel);
  bool ok = true;
  std::string detail;
  for (int n = 3; n <= 5; ++n) {
    auto t0 = std::chrono::steady_clock::now();
    ImmersedSurface eq = embed_latitude(mesh, n, 0.0);
    suite.push_back(eq);
    Spectrum sp = eigen_spectrum(assemble_jacobi(eq, normal_frame(eq)), n);
    double secs = seconds_since(t0);
    int mult = 0;
    for (double e : sp.eigenvalues) mult += std::abs(e - sp.eigenvalues[0]) <= kClusterRadius;
    bool this_ok = sp.eigenvalues[0] >= -2.0 - kClusterRadius && sp.eigenvalues[0] <= -2.0 + kClusterRadius &&
                   mult == n - 2 && secs < kSpectrumSeconds;
    ok = ok && this_ok;
    detail += "n=" + std::to_string(n) + " lambda0=" + fmt("%.6f", sp.eigenvalues[0]) +
              " mult=" + std::to_string(mult) + " (" + fmt("%.1f", secs) + "s) ";
  }
  return {ok, detail};
}

std::pair<bool, std::string> latitude_oracle() {
  auto t0 = std::chrono::steady_clock::now();
  ImmersedSurface eq = embed_latitude(build_icosphere(kLevel), 3, 0.0);
  NormalFrame frame = normal_frame(eq);
  LatitudeOracle oracle{0.1};
  FlowConfig cfg;
  cfg.step = kLatitudeStep;
  cfg.horizon = 1.5 * oracle.blow_up_time();
  cfg.record_every = 10;
  Trajectory tr = run_mcf(eq, frame, constant_section(frame, 0, oracle.s0), cfg);
  double secs = seconds_since(t0);
  gronwall.add(tr, epsilon_mesh(eq.mesh()));

  double worst = 0.0;
  bool reached = false;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    double s = tr.states[i].values.mean();
    if (s > 1.0) {
      reached = true;
      break;
    }
    worst = std::max(worst, std::abs(std::sin(s) / std::sin(oracle.latitude(tr.times[i])) - 1.0));
  }
  bool blew_up = tr.termination == Termination::BlowUp;
  double t_blow = tr.times.back();
  double blow_err = std::abs(t_blow / oracle.blow_up_time() - 1.0);
  bool ok = reached && worst < kLatitudeRelError && blew_up && blow_err < kBlowUpRelError &&
            secs < kLatitudeSeconds;
  return {ok, "max rel err sin s=" + fmt("%.2e", worst) + " blow-up t=" + fmt("%.4f", t_blow) + " vs " +
                  fmt("%.4f", oracle.blow_up_time()) + " (rel " + fmt("%.2e", blow_err) + ", " +
                  to_string(tr.termination) + ") " + fmt("%.1fs", secs)};
}

std::pair<bool, std::string> ancient_asymptotics() {
  auto t0 = std::chrono::steady_clock::now();
  ImmersedSurface eq = embed_latitude(build_icosphere(3), 3, 0.0);
  NormalFrame frame = normal_frame(eq);
  Spectrum sp = eigen_spectrum(assemble_jacobi(eq, frame), 1);
  NormalSection v = with_sup(sp.sections[0], 1.0);
  FlowConfig cfg;
  cfg.step = 1e-3;
  cfg.theta = 0.5;
  cfg.horizon = 5.0;
  cfg.record_every = 5;
  LadderConfig ladder;
  ladder.tolerance = kLadderTolerance;
  AncientSolution sol = construct_ancient(eq, frame, v, cfg, ladder);
  double secs = seconds_since(t0);
  const ConvergenceReport& r = sol.report;
  if (sol.trajectory.size() >= 3 && std::isfinite(sol.trajectory.f_value.front())) {
    gronwall.add(sol.trajectory, epsilon_mesh(eq.mesh()));
  }
  double last_diff = r.differences.empty() ? INFINITY : r.differences.back();
  double lead = r.leading.slope, rem = r.remainder.slope;
  bool ok = r.converged && last_diff < kLadderTolerance && std::abs(lead / 2.0 - 1.0) < kLeadingRelError &&
            rem >= kRemainderFloor && std::abs(rem / 6.0 - 1.0) < kRemainderRelError && secs < kAncientSeconds;
  return {ok, "rungs=" + std::to_string(r.rung_starts.size()) + " last diff=" + fmt("%.2e", last_diff) +
                  " leading=" + fmt("%.4f", lead) + " remainder=" + fmt("%.3f", rem) + " " + fmt("%.1fs", secs)};
}

std::pair<bool, std::string> rigidity_functional() {
  MeshPtr mesh = build_icosphere(kLevel);
  const double eps = epsilon_mesh(*mesh);
  bool zero_ok = true;
  double worst_f = 0.0;
  for (double s : {0.0, 0.2, 0.4, 0.8}) {
    ImmersedSurface lat = embed_latitude(mesh, 3, s);
    suite.push_back(lat);
    double f = f_functional(lat);
    worst_f = std::max(worst_f, std::abs(f));
    zero_ok = zero_ok && std::abs(f) <= eps;
  }

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> axis(0.6, 1.4);
  ImmersedSurface eq = embed_latitude(mesh, 3, 0.0);
  NormalFrame frame = normal_frame(eq);
  int held = 0;
  double margin = INFINITY;
  for (int i = 0; i < kPerturbedSurfaces; ++i) {
    ImmersedSurface s = [&] {
      if (i % 2 == 0) return graph_immersion(eq, frame, with_sup(random_polynomial(eq, 1, rng), 0.1));
      Eigen::Vector3d ax(axis(rng), axis(rng), axis(rng));
      std::vector<AmbientPoint> pos;
      for (const auto& p : mesh->reference()) pos.push_back(ax.cwiseProduct(p));
      return ImmersedSurface(mesh, std::move(pos), AmbientModel::euclidean(3));
    }();
    RigidityReport r = umbilicity_and_pinch(s);
    held += r.inequality_holds();
    margin = std::min(margin, r.f_value - 0.5 * r.umbilic_defect + eps);
    suite.push_back(std::move(s));
  }

  MeshPtr coarse = build_icosphere(3);
  ImmersedSurface ceq = embed_latitude(coarse, 3, 0.0);
  NormalFrame cframe = normal_frame(ceq);
  FlowConfig cfg;
  cfg.step = 1e-4;
  cfg.horizon = 0.2;
  cfg.record_every = 10;
  for (int i = 0; i < 3; ++i) {
    gronwall.add(run_mcf(ceq, cframe, with_sup(random_polynomial(ceq, 1, rng), 0.1), cfg), epsilon_mesh(*coarse));
  }

  bool ok = zero_ok && held == kPerturbedSurfaces && gronwall.all;
  return {ok, "max |F| on equator/latitudes=" + fmt("%.2e", worst_f) + " (eps " + fmt("%.2e", eps) + "), " +
                  std::to_string(held) + "/" + std::to_string(kPerturbedSurfaces) + " inequality (min margin " +
                  fmt("%.3e", margin) + "), Gronwall " + std::to_string(gronwall.flows) + " flows max excess " +
                  fmt("%.3e", gronwall.worst)};
}

std::pair<bool, std::string> gauss_bonnet() {
  for (int level = 0; level <= 5; ++level) suite.push_back(embed_round_sphere(build_icosphere(level), 1.0));
  double worst = 0.0;
  for (const auto& s : suite) worst = std::max(worst, std::abs(gauss_bonnet_defect(s)));
  return {worst < kGaussBonnetTol, std::to_string(suite.size()) + " meshes, max |defect|=" + fmt("%.2e", worst)};
}

std::pair<bool, std::string> second_variation() {
  ImmersedSurface eq = embed_latitude(build_icosphere(kLevel), 4, 0.0);
  NormalFrame frame = normal_frame(eq);
  JacobiMatrix j = assemble_jacobi(eq, frame);
  std::mt19937_64 rng(7);
  const double t = 1e-3;
  const double a0 = area(eq);
  double worst = 0.0;
  for (int k = 0; k < kSecondVariationSamples; ++k) {
    NormalSection v = with_sup(random_polynomial(eq, frame.rank, rng), 1.0);
    NormalSection plus = v, minus = v;
    plus.values *= t;
    minus.values *= -t;
    double d2 = (area(graph_immersion(eq, frame, plus)) - 2 * a0 + area(graph_immersion(eq, frame, minus))) / (t * t);
    double q = index_form(j, v, v);
    worst = std::max(worst, std::abs(d2 - q) / std::abs(q));
  }
  return {worst < kSecondVariationRelError,
          std::to_string(kSecondVariationSamples) + " sections on the equator of S^4, max rel err=" +
              fmt("%.3e", worst)};
}

std::pair<bool, std::string> schauder() {
  ImmersedSurface eq = embed_latitude(build_icosphere(3), 3, 0.0);
  SchauderTable t = schauder_ratio_experiment(eq, SchauderCase::DecayingMode, {1.0, 2.0, 4.0, 8.0}, {});
  std::string ratios;
  for (const auto& r : t.rows) ratios += fmt("%.4f ", r.ratio);
  return {t.variation < kSchauderVariation && !t.monotone_growth,
          "ratios " + ratios + "variation=" + fmt("%.4f", t.variation) +
              (t.monotone_growth ? " monotone" : " not monotone")};
}

std::pair<bool, std::string> width_anchor() {
  const int level = 3;
  const double eps = epsilon_mesh(*build_icosphere(level));
  AmbientModel round = AmbientModel::round_sphere(3);
  double l_std = evaluate_L(standard_sweepout(round, 41, level)).l_value;
  bool std_ok = std::abs(l_std / (4 * pi) - 1.0) < kWidthRelError;

  double best = INFINITY;
  for (int seed = 1; seed <= kWidthRuns; ++seed) {
    WidthOptions opt;
    opt.budget = 40;
    opt.seed = static_cast<unsigned>(seed);
    opt.initial_step = 0.4;
    opt.mesh_level = level;
    best = std::min(best, optimize_width_upper(round, sweep_lower_bounds(), sweep_upper_bounds(), opt).l_value);
  }
  bool opt_ok = best >= 4 * pi - eps;

  bool scale_ok = true;
  std::string scales;
  for (double c : {-0.3, 0.25}) {
    ConformalSpec spec;
    spec.kind = ConformalSpec::Kind::Constant;
    spec.value = c;
    double l = evaluate_L(standard_sweepout(width_metric(spec), 41, level)).l_value;
    double rel = std::abs(l / l_std / std::exp(2 * c) - 1.0);
    scale_ok = scale_ok && rel < kWidthRelError;
    scales += " c=" + fmt("%.2f", c) + " rel " + fmt("%.1e", rel);
  }
  return {std_ok && opt_ok && scale_ok, "standard L=" + fmt("%.6f", l_std) + " (4pi " + fmt("%.6f", 4 * pi) +
                                            "), min over " + std::to_string(kWidthRuns) +
                                            " optimized runs=" + fmt("%.6f", best) + " (floor " +
                                            fmt("%.6f", 4 * pi - eps) + "), scaling" + scales};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::pair<bool, std::string> determinism() {
  const std::vector<std::string> configs = {
      R"({"experiment":"spectrum","seed":4,"mesh":{"level":3},"spectrum":{"count":4}})",
      R"({"experiment":"flow","seed":4,"mesh":{"level":2},"flow":{"step":1e-3,"horizon":0.5,"record_every":10},
          "initial":{"kind":"random","amplitude":0.1}})",
      R"({"experiment":"ancient","seed":4,"mesh":{"level":2},"flow":{"step":1e-3,"theta":0.5,"horizon":5,"record_every":5}})",
      R"({"experiment":"rigidity","seed":4,"mesh":{"level":2},"rigidity":{"perturbations":3,"flow_horizon":0.05}})",
      R"({"experiment":"schauder","seed":4,"mesh":{"level":2},"schauder":{"horizons":[1,2]}})",
      R"({"experiment":"width","seed":4,"mesh":{"level":2},"width":{"budget":15}})",
  };
  fs::path root = fs::temp_directory_path() / "sphereflow_acceptance";
  fs::remove_all(root);
  int files = 0, mismatched = 0;
  for (const auto& text : configs) {
    Scenario sc = parse_scenario(text);
    RunResult a = run_scenario(sc, root / "a");
    RunResult b = run_scenario(sc, root / "b");
    if (a.files != b.files) ++mismatched;
    for (const auto& f : a.files) {
      ++files;
      if (slurp(root / "a" / f) != slurp(root / "b" / f)) ++mismatched;
    }
  }
  return {mismatched == 0 && files > 0, std::to_string(configs.size()) + " scenarios, " + std::to_string(files) +
                                            " files, " + std::to_string(mismatched) + " mismatches"};
}

}  // namespace

int main() {
  criterion(1, "spectrum anchor", spectrum_anchor);
  criterion(2, "latitude-flow oracle", latitude_oracle);
  criterion(3, "ancient-flow asymptotics", ancient_asymptotics);
  criterion(4, "rigidity functional", rigidity_functional);
  criterion(5, "Gauss-Bonnet", gauss_bonnet);
  criterion(6, "second-variation consistency", second_variation);
  criterion(7, "Schauder T-independence", schauder);
  criterion(8, "width anchor", width_anchor);
  criterion(9, "determinism", determinism);
  return failures == 0 ? 0 : 1;
}
