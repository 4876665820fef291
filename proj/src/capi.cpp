#include "sphereflow.h"

#include <new>
#include <string>

#include "sphereflow/jacobi.hpp"
#include "sphereflow/rigidity.hpp"
#include "sphereflow/scenario.hpp"

using namespace sphereflow;

struct sf_scenario {
  Scenario scenario;
  std::string experiment;
  std::string canonical;
};

struct sf_result {
  RunResult result;
};

struct sf_surface {
  ImmersedSurface surface;
};

namespace {

thread_local std::string g_last_error;

sf_status status_of(ErrorCode c) { return static_cast<sf_status>(static_cast<int>(c)); }

template <class F>
sf_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SF_ERR_INTERNAL;
  }
}

sf_status null_argument(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return SF_ERR_INVALID_INPUT;
}

sf_scenario* wrap(Scenario s) {
  auto* h = new sf_scenario{std::move(s), {}, {}};
  h->experiment = to_string(h->scenario.experiment);
  h->canonical = h->scenario.canonical_json();
  return h;
}

}  // namespace

extern "C" {

const char* sf_version(void) { return kVersion; }

const char* sf_status_string(sf_status status) {
  switch (status) {
    case SF_OK: return "ok";
    case SF_ERR_INVALID_INPUT: return "invalid input";
    case SF_ERR_DOMAIN: return "domain error";
    case SF_ERR_DEGENERATE_MESH: return "degenerate mesh";
    case SF_ERR_GAUGE_LOSS: return "gauge loss";
    case SF_ERR_BLOW_UP: return "blow-up";
    case SF_ERR_SOLVER_FAILURE: return "solver failure";
    case SF_ERR_CONFIG: return "configuration error";
    case SF_ERR_IO: return "i/o error";
    case SF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sf_last_error(void) { return g_last_error.c_str(); }

sf_status sf_scenario_parse(const char* json_text, sf_scenario** out) {
  if (!json_text) return null_argument("json_text");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = wrap(parse_scenario(json_text)); });
}

sf_status sf_scenario_load(const char* path, sf_scenario** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = wrap(load_scenario(path)); });
}

void sf_scenario_free(sf_scenario* scenario) { delete scenario; }

sf_status sf_scenario_set_seed(sf_scenario* scenario, uint64_t seed) {
  if (!scenario) return null_argument("scenario");
  if (seed > (uint64_t(1) << 53)) {
    g_last_error = "config error: 'seed' must lie in [0, 2^53]";
    return SF_ERR_CONFIG;
  }
  Scenario& s = scenario->scenario;
  s.seed = seed;
  s.width.seed = static_cast<unsigned>(seed);
  s.spectrum.options.seed = static_cast<unsigned>(seed);
  scenario->canonical = s.canonical_json();
  g_last_error.clear();
  return SF_OK;
}

uint64_t sf_scenario_seed(const sf_scenario* scenario) { return scenario ? scenario->scenario.seed : 0; }

const char* sf_scenario_experiment(const sf_scenario* scenario) {
  return scenario ? scenario->experiment.c_str() : "";
}

const char* sf_scenario_output(const sf_scenario* scenario) {
  return scenario ? scenario->scenario.output.c_str() : "";
}

const char* sf_scenario_canonical(const sf_scenario* scenario) {
  return scenario ? scenario->canonical.c_str() : "";
}

sf_status sf_scenario_run(const sf_scenario* scenario, const char* out_dir, sf_result** out) {
  if (!scenario) return null_argument("scenario");
  if (!out_dir) return null_argument("out_dir");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new sf_result{run_scenario(scenario->scenario, out_dir)}; });
}

size_t sf_result_num_files(const sf_result* result) { return result ? result->result.files.size() : 0; }

const char* sf_result_file(const sf_result* result, size_t index) {
  if (!result || index >= result->result.files.size()) return nullptr;
  return result->result.files[index].c_str();
}

const char* sf_result_summary(const sf_result* result) {
  return result ? result->result.summary_json.c_str() : "";
}

void sf_result_free(sf_result* result) { delete result; }

sf_status sf_surface_latitude(int level, int n, double s, sf_surface** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    if (level < 0 || level > 7) fail(ErrorCode::InvalidInput, "mesh level must be in 0..7");
    *out = new sf_surface{embed_latitude(build_icosphere(level), n, s)};
  });
}

void sf_surface_free(sf_surface* surface) { delete surface; }

int sf_surface_num_vertices(const sf_surface* surface) {
  return surface ? surface->surface.num_vertices() : 0;
}

sf_status sf_surface_area(const sf_surface* surface, double* value) {
  if (!surface) return null_argument("surface");
  if (!value) return null_argument("area");
  return guarded([&] { *value = area(surface->surface); });
}

sf_status sf_surface_f_functional(const sf_surface* surface, double* value) {
  if (!surface) return null_argument("surface");
  if (!value) return null_argument("value");
  return guarded([&] { *value = f_functional(surface->surface); });
}

sf_status sf_surface_gauss_bonnet_defect(const sf_surface* surface, double* defect) {
  if (!surface) return null_argument("surface");
  if (!defect) return null_argument("defect");
  return guarded([&] { *defect = gauss_bonnet_defect(surface->surface); });
}

sf_status sf_surface_jacobi_spectrum(const sf_surface* surface, int k, double* eigenvalues) {
  if (!surface) return null_argument("surface");
  if (!eigenvalues) return null_argument("eigenvalues");
  return guarded([&] {
    const ImmersedSurface& s = surface->surface;
    Spectrum sp = eigen_spectrum(assemble_jacobi(s, normal_frame(s)), k);
    for (int i = 0; i < k; ++i) eigenvalues[i] = sp.eigenvalues[i];
  });
}

}  // extern "C"
