#include "sphereflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <json.hpp>

#include "sphereflow/format.hpp"
#include "sphereflow/rigidity.hpp"

namespace sphereflow {

using Json = nlohmann::ordered_json;

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::Spectrum: return "spectrum";
    case Experiment::Flow: return "flow";
    case Experiment::Ancient: return "ancient";
    case Experiment::Rigidity: return "rigidity";
    case Experiment::Schauder: return "schauder";
    case Experiment::Width: return "width";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// Strict reading: every key must be consumed, every value checked.

class Reader {
 public:
  Reader(const Json& j, std::string path, const std::string& text)
      : j_(j), path_(std::move(path)), text_(text) {
    if (!j_.is_object()) bad(path_.empty() ? "document" : path_, "must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  Reader child(const char* key) {
    used_.insert(key);
    static const Json empty = Json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, name(key), text_);
  }

  double number(const char* key, double def) {
    const Json* v = take(key);
    if (!v) return def;
    if (!v->is_number()) bad(name(key), "must be a number");
    double x = v->get<double>();
    if (!std::isfinite(x)) bad(name(key), "must be finite");
    return x;
  }

  double number(const char* key, double def, double lo, double hi) {
    double x = number(key, def);
    if (!(x >= lo && x <= hi)) {
      bad(name(key), "must lie in [" + format_double(lo) + ", " + format_double(hi) + "], got " +
                         format_double(x));
    }
    return x;
  }

  long long integer(const char* key, long long def, long long lo, long long hi) {
    const Json* v = take(key);
    if (!v) return def;
    if (!v->is_number_integer()) bad(name(key), "must be an integer");
    long long x = v->is_number_unsigned() ? static_cast<long long>(std::min<std::uint64_t>(
                                                v->get<std::uint64_t>(), std::uint64_t(1) << 62))
                                          : v->get<long long>();
    if (x < lo || x > hi) {
      bad(name(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " +
                         std::to_string(x));
    }
    return x;
  }

  bool boolean(const char* key, bool def) {
    const Json* v = take(key);
    if (!v) return def;
    if (!v->is_boolean()) bad(name(key), "must be true or false");
    return v->get<bool>();
  }

  std::string string(const char* key, const std::string& def) {
    const Json* v = take(key);
    if (!v) return def;
    if (!v->is_string()) bad(name(key), "must be a string");
    return v->get<std::string>();
  }

  std::string choice(const char* key, const std::string& def, std::initializer_list<const char*> options) {
    const Json* v = take(key);
    if (!v) return def;
    if (!v->is_string()) bad(name(key), "must be a string");
    std::string s = v->get<std::string>();
    for (const char* o : options) {
      if (s == o) return s;
    }
    std::string list;
    for (const char* o : options) list += std::string(list.empty() ? "" : ", ") + o;
    bad(name(key), "must be one of {" + list + "}, got '" + s + "'");
  }

  std::vector<double> numbers(const char* key, const std::vector<double>& def) {
    const Json* v = take(key);
    if (!v) return def;
    if (!v->is_array()) bad(name(key), "must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : *v) {
      if (!x.is_number()) bad(name(key), "must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::string required_choice(const char* key, std::initializer_list<const char*> options) {
    if (!j_.contains(key)) bad(name(key), "is required");
    return choice(key, "", options);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) bad(name(it.key().c_str()), "unknown key");
    }
  }

  [[noreturn]] void bad(const std::string& field, const std::string& what) const {
    std::string msg = "config error: '" + field + "' " + what;
    // Report the line of the first occurrence of the last path component.
    std::string last = field.substr(field.rfind('.') + 1);
    auto pos = text_.find("\"" + last + "\"");
    if (pos != std::string::npos) {
      msg += " (line " + std::to_string(1 + std::count(text_.begin(), text_.begin() + pos, '\n')) + ")";
    }
    fail(ErrorCode::Config, msg);
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const Json* take(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  const Json& j_;
  std::string path_;
  const std::string& text_;
  std::set<std::string> used_;
};

const char* ambient_name(AmbientKind k) {
  switch (k) {
    case AmbientKind::RoundSphere: return "round_sphere";
    case AmbientKind::Euclidean: return "euclidean";
    case AmbientKind::ConformalSphere3: return "conformal_sphere3";
  }
  return "?";
}

const char* initial_name(InitialSpec::Kind k) {
  switch (k) {
    case InitialSpec::Kind::Zero: return "zero";
    case InitialSpec::Kind::Constant: return "constant";
    case InitialSpec::Kind::Eigen: return "eigen";
    case InitialSpec::Kind::Random: return "random";
  }
  return "?";
}

const char* scheme_name(Scheme s) { return s == Scheme::Explicit ? "explicit" : "semi_implicit"; }

Json array_of(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json array_of(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json fit_json(const ExponentFit& f) {
  return Json{{"slope", f.slope}, {"intercept", f.intercept}, {"stderr_slope", f.stderr_slope},
              {"samples", f.samples}};
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------

Scenario parse_scenario(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(end), '\n');
    fail(ErrorCode::Config, "config error: invalid JSON at line " + std::to_string(line) + ": " + e.what());
  }
  Reader root(doc, "", text);
  Scenario sc;

  std::string exp = root.required_choice(
      "experiment", {"spectrum", "flow", "ancient", "rigidity", "schauder", "width"});
  for (Experiment e : {Experiment::Spectrum, Experiment::Flow, Experiment::Ancient,
                       Experiment::Rigidity, Experiment::Schauder, Experiment::Width}) {
    if (exp == to_string(e)) sc.experiment = e;
  }
  sc.seed = static_cast<std::uint64_t>(root.integer("seed", 1, 0, (1LL << 53)));
  sc.output = root.string("output", "");

  {
    Reader a = root.child("ambient");
    std::string kind = a.choice("kind", "round_sphere", {"round_sphere", "euclidean", "conformal_sphere3"});
    sc.ambient.kind = kind == "euclidean"           ? AmbientKind::Euclidean
                      : kind == "conformal_sphere3" ? AmbientKind::ConformalSphere3
                                                    : AmbientKind::RoundSphere;
    sc.ambient.n = static_cast<int>(a.integer("n", 3, 3, kMaxCoords - 1));
    Reader c = a.child("conformal");
    std::string ck = c.choice("kind", "none", {"none", "constant", "gaussian_band"});
    ConformalSpec& cs = sc.ambient.conformal;
    cs.kind = ck == "constant"        ? ConformalSpec::Kind::Constant
              : ck == "gaussian_band" ? ConformalSpec::Kind::GaussianBand
                                      : ConformalSpec::Kind::None;
    cs.value = c.number("value", 0.0, -5.0, 5.0);
    cs.amplitude = c.number("amplitude", 0.0, -5.0, 5.0);
    cs.width = c.number("width", 0.3, 1e-3, 10.0);
    cs.axis = static_cast<int>(c.integer("axis", 0, 0, 3));
    c.finish();
    a.finish();
    if (sc.experiment == Experiment::Width) {
      if (sc.ambient.kind == AmbientKind::Euclidean) a.bad("ambient.kind", "must be a 3-sphere for width");
      if (sc.ambient.n != 3) a.bad("ambient.n", "must be 3 for width");
      if (sc.ambient.kind == AmbientKind::RoundSphere && cs.kind != ConformalSpec::Kind::None) {
        a.bad("ambient.conformal.kind", "requires ambient.kind = conformal_sphere3");
      }
    } else {
      if (sc.ambient.kind != AmbientKind::RoundSphere) {
        a.bad("ambient.kind", "must be round_sphere for this experiment");
      }
      if (cs.kind != ConformalSpec::Kind::None) a.bad("ambient.conformal.kind", "is only used by width");
    }
  }

  {
    Reader m = root.child("mesh");
    sc.mesh_level = static_cast<int>(m.integer("level", 3, 1, 6));
    m.finish();
  }
  {
    Reader b = root.child("base");
    sc.base_latitude = b.number("latitude", 0.0, -1.2, 1.2);
    b.finish();
  }
  {
    Reader f = root.child("flow");
    FlowConfig& c = sc.flow;
    c.step = f.number("step", c.step, 1e-8, 1.0);
    c.scheme = f.choice("scheme", "semi_implicit", {"explicit", "semi_implicit"}) == "explicit"
                   ? Scheme::Explicit
                   : Scheme::SemiImplicit;
    c.theta = f.number("theta", c.theta, 0.0, 1.0);
    c.horizon = f.number("horizon", c.horizon, 1e-8, 1e4);
    c.blow_up_threshold = f.number("blow_up_threshold", c.blow_up_threshold, 1e-6, 10.0);
    c.gauge_margin = f.number("gauge_margin", c.gauge_margin, 1e-9, 1.0);
    c.record_every = static_cast<int>(f.integer("record_every", c.record_every, 1, 1000000));
    c.diagnostics = f.boolean("diagnostics", c.diagnostics);
    c.sup_norm_cap = f.number("sup_norm_cap", c.sup_norm_cap, 0.0, kFocalRadius);
    f.finish();
    try {
      c.validate();
    } catch (const Error& e) {
      f.bad("flow", e.what());
    }
  }
  {
    Reader i = root.child("initial");
    std::string k = i.choice("kind", "constant", {"zero", "constant", "eigen", "random"});
    sc.initial.kind = k == "zero"     ? InitialSpec::Kind::Zero
                      : k == "eigen"  ? InitialSpec::Kind::Eigen
                      : k == "random" ? InitialSpec::Kind::Random
                                      : InitialSpec::Kind::Constant;
    sc.initial.amplitude = i.number("amplitude", sc.initial.amplitude, -1.5, 1.5);
    sc.initial.component = static_cast<int>(i.integer("component", 0, 0, sc.ambient.n - 3));
    i.finish();
  }
  {
    Reader l = root.child("ladder");
    LadderConfig& c = sc.ladder;
    c.delta_a = l.number("delta_a", c.delta_a, 1e-3, 100.0);
    c.cap = l.number("cap", c.cap, 1e-6, kFocalRadius);
    c.start_amplitude = l.number("start_amplitude", c.start_amplitude, 1e-12, kFocalRadius);
    c.tolerance = l.number("tolerance", c.tolerance, 1e-15, 1.0);
    c.max_rungs = static_cast<int>(l.integer("max_rungs", c.max_rungs, 2, 50));
    c.fit_window = l.number("fit_window", c.fit_window, 1e-3, 100.0);
    c.remainder_low = l.number("remainder_low", c.remainder_low, 1e-12, kFocalRadius);
    c.remainder_high = l.number("remainder_high", c.remainder_high, 1e-12, kFocalRadius);
    c.eigen_tolerance = l.number("eigen_tolerance", c.eigen_tolerance, 1e-15, 1.0);
    l.finish();
    try {
      c.validate();
    } catch (const Error& e) {
      l.bad("ladder", e.what());
    }
  }
  {
    Reader s = root.child("spectrum");
    sc.spectrum.count = static_cast<int>(s.integer("count", sc.spectrum.count, 1, 200));
    sc.spectrum.options.tolerance = s.number("tolerance", sc.spectrum.options.tolerance, 1e-14, 1e-2);
    sc.spectrum.options.max_iterations =
        static_cast<int>(s.integer("max_iterations", sc.spectrum.options.max_iterations, 1, 100000));
    s.finish();
  }
  {
    Reader r = root.child("rigidity");
    sc.rigidity.latitudes = r.numbers("latitudes", sc.rigidity.latitudes);
    for (double s : sc.rigidity.latitudes) {
      if (!(std::abs(s) <= 1.2)) r.bad("rigidity.latitudes", "entries must lie in [-1.2, 1.2]");
    }
    sc.rigidity.perturbations = static_cast<int>(r.integer("perturbations", sc.rigidity.perturbations, 0, 1000));
    sc.rigidity.amplitude = r.number("amplitude", sc.rigidity.amplitude, 0.0, 0.5);
    sc.rigidity.flow_horizon = r.number("flow_horizon", sc.rigidity.flow_horizon, 0.0, 10.0);
    r.finish();
  }
  {
    Reader s = root.child("schauder");
    sc.schauder.family = s.choice("family", "decaying_mode", {"decaying_mode", "periodic_forcing"}) ==
                                 "periodic_forcing"
                             ? SchauderCase::PeriodicForcing
                             : SchauderCase::DecayingMode;
    sc.schauder.horizons = s.numbers("horizons", sc.schauder.horizons);
    if (sc.schauder.horizons.empty()) s.bad("schauder.horizons", "must not be empty");
    for (std::size_t i = 0; i < sc.schauder.horizons.size(); ++i) {
      double t = sc.schauder.horizons[i];
      if (!(t > 0.0 && t <= 100.0) || (i > 0 && !(t > sc.schauder.horizons[i - 1]))) {
        s.bad("schauder.horizons", "must be increasing values in (0, 100]");
      }
    }
    sc.schauder.options.alpha = s.number("alpha", sc.schauder.options.alpha, 1e-3, 0.999);
    sc.schauder.options.step = s.number("step", sc.schauder.options.step, 1e-5, 0.5);
    sc.schauder.options.theta = s.number("theta", sc.schauder.options.theta, 0.5, 1.0);
    s.finish();
  }
  {
    Reader w = root.child("width");
    WidthOptions& o = sc.width;
    o.budget = static_cast<int>(w.integer("budget", o.budget, 1, 100000));
    o.initial_step = w.number("initial_step", o.initial_step, 1e-6, 1.0);
    o.min_step = w.number("min_step", o.min_step, 1e-9, 1.0);
    o.n_t = static_cast<int>(w.integer("n_t", o.n_t, 3, 10001));
    w.finish();
  }
  root.finish();
  sc.width.seed = static_cast<unsigned>(sc.seed);
  sc.width.mesh_level = sc.mesh_level;
  sc.spectrum.options.seed = static_cast<unsigned>(sc.seed);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "config error: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string Scenario::canonical_json() const {
  const ConformalSpec& cs = ambient.conformal;
  Json j;
  j["experiment"] = to_string(experiment);
  j["seed"] = seed;
  j["ambient"] = {{"kind", ambient_name(ambient.kind)},
                  {"n", ambient.n},
                  {"conformal",
                   {{"kind", to_string(cs.kind)},
                    {"value", cs.value},
                    {"amplitude", cs.amplitude},
                    {"width", cs.width},
                    {"axis", cs.axis}}}};
  j["mesh"] = {{"level", mesh_level}};
  j["base"] = {{"latitude", base_latitude}};
  j["flow"] = {{"step", flow.step},
               {"scheme", scheme_name(flow.scheme)},
               {"theta", flow.theta},
               {"horizon", flow.horizon},
               {"blow_up_threshold", flow.blow_up_threshold},
               {"gauge_margin", flow.gauge_margin},
               {"record_every", flow.record_every},
               {"diagnostics", flow.diagnostics},
               {"sup_norm_cap", flow.sup_norm_cap}};
  j["initial"] = {{"kind", initial_name(initial.kind)},
                  {"amplitude", initial.amplitude},
                  {"component", initial.component}};
  j["ladder"] = {{"delta_a", ladder.delta_a},
                 {"cap", ladder.cap},
                 {"start_amplitude", ladder.start_amplitude},
                 {"tolerance", ladder.tolerance},
                 {"max_rungs", ladder.max_rungs},
                 {"fit_window", ladder.fit_window},
                 {"remainder_low", ladder.remainder_low},
                 {"remainder_high", ladder.remainder_high},
                 {"eigen_tolerance", ladder.eigen_tolerance}};
  j["spectrum"] = {{"count", spectrum.count},
                   {"tolerance", spectrum.options.tolerance},
                   {"max_iterations", spectrum.options.max_iterations}};
  j["rigidity"] = {{"latitudes", array_of(rigidity.latitudes)},
                   {"perturbations", rigidity.perturbations},
                   {"amplitude", rigidity.amplitude},
                   {"flow_horizon", rigidity.flow_horizon}};
  j["schauder"] = {{"family", to_string(schauder.family)},
                   {"horizons", array_of(schauder.horizons)},
                   {"alpha", schauder.options.alpha},
                   {"step", schauder.options.step},
                   {"theta", schauder.options.theta}};
  j["width"] = {{"budget", width.budget},
                {"initial_step", width.initial_step},
                {"min_step", width.min_step},
                {"n_t", width.n_t}};
  if (!output.empty()) j["output"] = output;
  return j.dump(2);
}

// ---------------------------------------------------------------------------

namespace {

struct Context {
  const Scenario& sc;
  std::filesystem::path dir;
  std::string stem;
  std::vector<std::string> files;
  Json tolerances = Json::object();

  std::filesystem::path file(const std::string& suffix) {
    files.push_back(stem + suffix);
    return dir / files.back();
  }
};

ImmersedSurface make_base(const Scenario& sc) {
  return embed_latitude(build_icosphere(sc.mesh_level), sc.ambient.n, sc.base_latitude);
}

NormalSection scaled_to_sup(NormalSection s, double amplitude) {
  double sup = s.values.cwiseAbs().maxCoeff();
  if (!(sup > 0.0)) fail(ErrorCode::Domain, "cannot normalize a vanishing section");
  Eigen::Index idx;
  s.values.cwiseAbs().maxCoeff(&idx);
  double sign = s.values(idx) < 0 ? -1.0 : 1.0;
  s.values *= sign * amplitude / sup;
  return s;
}

// Degree <= 2 polynomial of the reference coordinates with seeded coefficients.
NormalSection smooth_random(const ImmersedSurface& base, int rank, std::mt19937_64& rng) {
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

NormalSection first_eigensection(const ImmersedSurface& base, const NormalFrame& frame,
                                 const Scenario& sc, double* lambda0) {
  Spectrum sp = eigen_spectrum(assemble_jacobi(base, frame), 1, sc.spectrum.options);
  if (lambda0) *lambda0 = sp.eigenvalues[0];
  return sp.sections[0];
}

Json run_spectrum(Context& ctx) {
  const Scenario& sc = ctx.sc;
  ImmersedSurface base = make_base(sc);
  NormalFrame frame = normal_frame(base);
  JacobiMatrix jac = assemble_jacobi(base, frame);
  Spectrum sp = eigen_spectrum(jac, sc.spectrum.count, sc.spectrum.options);
  write_spectrum_csv(ctx.file(".csv"), sp);
  int multiplicity = 0;
  for (double e : sp.eigenvalues) {
    if (std::abs(e - sp.eigenvalues[0]) <= 0.05) ++multiplicity;
  }
  ctx.tolerances["eigen_residual"] = sc.spectrum.options.tolerance;
  ctx.tolerances["cluster_radius"] = 0.05;
  Json warnings = Json::array();
  for (const auto& w : jac.warnings) warnings.push_back(w);
  return Json{{"experiment", "spectrum"},
              {"lambda0", sp.eigenvalues[0]},
              {"multiplicity", multiplicity},
              {"eigenvalues", array_of(sp.eigenvalues)},
              {"residuals", array_of(sp.residuals)},
              {"iterations", sp.iterations},
              {"max_mean_curvature", jac.max_mean_curvature},
              {"warnings", warnings}};
}

Json gronwall_json(const Trajectory& tr, double eps, Context& ctx, const std::string& suffix) {
  if (tr.size() < 3) return Json{{"evaluated", false}, {"reason", "fewer than 3 samples"}};
  GronwallSeries g = gronwall_monotonicity(tr, eps);
  std::ofstream out(ctx.file(suffix));
  if (!out) fail(ErrorCode::Io, "cannot open Gronwall series");
  out << "t,residual,tolerance\n";
  for (std::size_t i = 0; i < g.times.size(); ++i) {
    out << format_double(g.times[i]) << ',' << format_double(g.residuals[i]) << ','
        << format_double(g.tolerance[i]) << '\n';
  }
  return Json{{"evaluated", true}, {"holds", g.holds()}, {"max_excess", g.max_excess},
              {"samples", g.times.size()}};
}

Json run_flow(Context& ctx) {
  const Scenario& sc = ctx.sc;
  ImmersedSurface base = make_base(sc);
  NormalFrame frame = normal_frame(base);
  NormalSection u0(frame.rank, base.num_vertices());
  std::mt19937_64 rng(sc.seed);
  switch (sc.initial.kind) {
    case InitialSpec::Kind::Zero: break;
    case InitialSpec::Kind::Constant:
      u0 = constant_section(frame, sc.initial.component, sc.initial.amplitude);
      break;
    case InitialSpec::Kind::Eigen:
      u0 = scaled_to_sup(first_eigensection(base, frame, sc, nullptr), sc.initial.amplitude);
      break;
    case InitialSpec::Kind::Random:
      u0 = scaled_to_sup(smooth_random(base, frame.rank, rng), sc.initial.amplitude);
      break;
  }
  BundleFlow flow(base, frame, sc.flow);
  Trajectory tr = flow.run(u0);
  write_trajectory_csv(ctx.file(".csv"), tr);
  const double eps = epsilon_mesh(base.mesh());
  ctx.tolerances["epsilon_mesh"] = eps;
  ctx.tolerances["blow_up_threshold"] = sc.flow.blow_up_threshold;
  ctx.tolerances["gauge_margin"] = sc.flow.gauge_margin;

  Json summary{{"experiment", "flow"},
               {"termination", to_string(tr.termination)},
               {"message", tr.message},
               {"samples", tr.size()},
               {"final_time", tr.times.empty() ? 0.0 : tr.times.back()},
               {"final_sup_norm", tr.sup_norm.empty() ? 0.0 : tr.sup_norm.back()},
               {"mesh_scale", flow.mesh_scale()}};
  if (sc.flow.diagnostics) summary["gronwall"] = gronwall_json(tr, eps, ctx, ".gronwall.csv");
  try {
    ImmersedSurface last = graph_immersion(base, frame, tr.states.back(), sc.flow.gauge_margin);
    write_off(ctx.file(".final.off"), base.mesh(), last.position_matrix());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::GaugeLoss) throw;
  }
  // Latitude oracle for a constant section over the equator of S^3.
  if (sc.ambient.n == 3 && sc.base_latitude == 0.0 && sc.initial.kind == InitialSpec::Kind::Constant &&
      sc.initial.amplitude > 0.0) {
    LatitudeOracle oracle{sc.initial.amplitude};
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      double s = tr.states[i].values.mean();
      if (s > 1.0) break;
      worst = std::max(worst, std::abs(std::sin(s) / std::sin(oracle.latitude(tr.times[i])) - 1.0));
    }
    Json o{{"s0", oracle.s0}, {"max_relative_error_sin_s", worst}, {"blow_up_time", oracle.blow_up_time()}};
    if (tr.termination == Termination::BlowUp) {
      o["observed_blow_up_time"] = tr.times.back();
      o["blow_up_relative_error"] = std::abs(tr.times.back() / oracle.blow_up_time() - 1.0);
    }
    summary["latitude_oracle"] = o;
  }
  return summary;
}

Json run_ancient(Context& ctx) {
  const Scenario& sc = ctx.sc;
  ImmersedSurface base = make_base(sc);
  NormalFrame frame = normal_frame(base);
  NormalSection v = scaled_to_sup(first_eigensection(base, frame, sc, nullptr), 1.0);
  AncientSolution sol = construct_ancient(base, frame, v, sc.flow, sc.ladder);
  write_trajectory_csv(ctx.file(".csv"), sol.trajectory);
  const ConvergenceReport& r = sol.report;
  ctx.tolerances["ladder_tolerance"] = sc.ladder.tolerance;
  ctx.tolerances["eigen_tolerance"] = sc.ladder.eigen_tolerance;
  return Json{{"experiment", "ancient"},
              {"lambda0", r.lambda0},
              {"eigen_residual", r.eigen_residual},
              {"converged", r.converged},
              {"rung_starts", array_of(r.rung_starts)},
              {"differences", array_of(r.differences)},
              {"ceiling", r.ceiling},
              {"leading", fit_json(r.leading)},
              {"remainder", fit_json(r.remainder)},
              {"remainder_times", array_of(r.remainder_times)},
              {"remainder_norms", array_of(r.remainder_norms)},
              {"message", r.message}};
}

Json run_rigidity(Context& ctx) {
  const Scenario& sc = ctx.sc;
  MeshPtr mesh = build_icosphere(sc.mesh_level);
  const double eps = epsilon_mesh(*mesh);
  ctx.tolerances["epsilon_mesh"] = eps;
  std::mt19937_64 rng(sc.seed);
  std::uniform_real_distribution<double> axis(0.6, 1.4);

  struct Row {
    std::string name;
    RigidityReport r;
  };
  std::vector<Row> rows;
  for (double s : sc.rigidity.latitudes) {
    rows.push_back({"latitude s=" + format_double(s), umbilicity_and_pinch(embed_latitude(mesh, sc.ambient.n, s))});
  }
  ImmersedSurface equator = embed_latitude(mesh, sc.ambient.n, 0.0);
  NormalFrame frame = normal_frame(equator);
  for (int i = 0; i < sc.rigidity.perturbations; ++i) {
    NormalSection u = scaled_to_sup(smooth_random(equator, frame.rank, rng), sc.rigidity.amplitude);
    rows.push_back({"perturbed equator #" + std::to_string(i),
                    umbilicity_and_pinch(graph_immersion(equator, frame, u))});
  }
  rows.push_back({"euclidean sphere r=0.5", umbilicity_and_pinch(embed_round_sphere(mesh, 0.5))});
  for (int i = 0; i < sc.rigidity.perturbations; ++i) {
    Eigen::Vector3d ax(axis(rng), axis(rng), axis(rng));
    std::vector<AmbientPoint> pos;
    for (const auto& p : mesh->reference()) pos.push_back(ax.cwiseProduct(p));
    rows.push_back({"ellipsoid #" + std::to_string(i),
                    umbilicity_and_pinch(ImmersedSurface(mesh, std::move(pos), AmbientModel::euclidean(3)))});
  }

  std::ofstream out(ctx.file(".csv"));
  if (!out) fail(ErrorCode::Io, "cannot open rigidity table");
  out << "surface,F,umbilic_defect,curvature_pinch,epsilon,holds\n";
  bool all = true;
  double margin = std::numeric_limits<double>::infinity();
  for (const Row& row : rows) {
    out << row.name << ',' << format_double(row.r.f_value) << ',' << format_double(row.r.umbilic_defect)
        << ',' << format_double(row.r.curvature_pinch) << ',' << format_double(row.r.epsilon) << ','
        << (row.r.inequality_holds() ? 1 : 0) << '\n';
    all = all && row.r.inequality_holds();
    margin = std::min(margin, row.r.f_value - 0.5 * row.r.umbilic_defect + row.r.epsilon);
  }
  out.close();
  Json summary{{"experiment", "rigidity"}, {"surfaces", rows.size()}, {"all_hold", all},
               {"min_margin", margin}};
  if (sc.rigidity.flow_horizon > 0.0) {
    FlowConfig cfg = sc.flow;
    cfg.horizon = sc.rigidity.flow_horizon;
    cfg.diagnostics = true;
    NormalSection u0 = scaled_to_sup(smooth_random(equator, frame.rank, rng), sc.rigidity.amplitude);
    Trajectory tr = run_mcf(equator, frame, u0, cfg);
    summary["gronwall"] = gronwall_json(tr, eps, ctx, ".gronwall.csv");
  }
  return summary;
}

Json run_schauder(Context& ctx) {
  const Scenario& sc = ctx.sc;
  SchauderTable t = schauder_ratio_experiment(make_base(sc), sc.schauder.family, sc.schauder.horizons,
                                              sc.schauder.options);
  std::ofstream out(ctx.file(".csv"));
  if (!out) fail(ErrorCode::Io, "cannot open Schauder table");
  out << "T,u_norm,f_norm,u0_norm,l2,ratio\n";
  Json ratios = Json::array();
  for (const auto& r : t.rows) {
    out << format_double(r.horizon) << ',' << format_double(r.u_norm) << ',' << format_double(r.f_norm)
        << ',' << format_double(r.u0_norm) << ',' << format_double(r.l2) << ',' << format_double(r.ratio)
        << '\n';
    ratios.push_back(r.ratio);
  }
  ctx.tolerances["max_variation"] = 1.2;
  return Json{{"experiment", "schauder"},
              {"family", to_string(t.family)},
              {"alpha", sc.schauder.options.alpha},
              {"ratios", ratios},
              {"variation", t.variation},
              {"monotone_growth", t.monotone_growth}};
}

Json run_width(Context& ctx) {
  const Scenario& sc = ctx.sc;
  AmbientModel metric = sc.ambient.kind == AmbientKind::RoundSphere ? AmbientModel::round_sphere(3)
                                                                    : width_metric(sc.ambient.conformal);
  WidthReport standard = evaluate_L(standard_sweepout(metric, sc.width.n_t, sc.mesh_level));
  WidthReport best = optimize_width_upper(metric, sweep_lower_bounds(), sweep_upper_bounds(), sc.width);
  write_width_trace_csv(ctx.file(".trace.csv"), best);
  ctx.tolerances["epsilon_mesh"] = epsilon_mesh(*build_icosphere(sc.mesh_level));
  ctx.tolerances["refine_displacement"] = kRefineDisplacement;
  ctx.tolerances["refine_depth"] = kRefineDepth;
  ctx.tolerances["min_step"] = sc.width.min_step;
  return Json{{"experiment", "width"},
              {"label", "upper bound"},
              {"metric", best.metric},
              {"L", best.l_value},
              {"argmax_t", best.argmax_t},
              {"parameters", array_of(best.params)},
              {"standard_L", standard.l_value},
              {"evaluations", best.evaluations},
              {"t", array_of(best.t)},
              {"areas", array_of(best.areas)}};
}

}  // namespace

RunResult run_scenario(const Scenario& sc, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory " + out_dir.string() + ": " + ec.message());

  Context ctx{sc, out_dir, std::string(to_string(sc.experiment)) + "-" + std::to_string(sc.seed), {}};
  Json summary;
  switch (sc.experiment) {
    case Experiment::Spectrum: summary = run_spectrum(ctx); break;
    case Experiment::Flow: summary = run_flow(ctx); break;
    case Experiment::Ancient: summary = run_ancient(ctx); break;
    case Experiment::Rigidity: summary = run_rigidity(ctx); break;
    case Experiment::Schauder: summary = run_schauder(ctx); break;
    case Experiment::Width: summary = run_width(ctx); break;
  }
  write_json(ctx.file(".json"), summary);

  auto manifest_path = ctx.file(".manifest.json");
  Json outputs = Json::array();
  for (const auto& f : ctx.files) outputs.push_back(f);
  Json manifest{{"tool", "sphereflow"},
                {"version", kVersion},
                {"experiment", to_string(sc.experiment)},
                {"seed", sc.seed},
                {"config", Json::parse(sc.canonical_json())},
                {"versions",
                 {{"sphereflow", kVersion},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                "." + std::to_string(EIGEN_MINOR_VERSION)},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                        std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                  {"compiler", __VERSION__}}},
                {"tolerances", ctx.tolerances},
                {"outputs", outputs}};
  write_json(manifest_path, manifest);

  RunResult result;
  result.files = ctx.files;
  result.summary_json = summary.dump(2);
  return result;
}

}  // namespace sphereflow
