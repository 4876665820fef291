#ifndef SPHEREFLOW_H
#define SPHEREFLOW_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SF_API __declspec(dllexport)
#else
#define SF_API __attribute__((visibility("default")))
#endif

/* Status codes. Every function returning sf_status sets a thread-local
   message readable with sf_last_error() on failure. */
typedef enum sf_status {
  SF_OK = 0,
  SF_ERR_INVALID_INPUT = 1,
  SF_ERR_DOMAIN = 2,
  SF_ERR_DEGENERATE_MESH = 3,
  SF_ERR_GAUGE_LOSS = 4,
  SF_ERR_BLOW_UP = 5,
  SF_ERR_SOLVER_FAILURE = 6,
  SF_ERR_CONFIG = 7,
  SF_ERR_IO = 8,
  SF_ERR_INTERNAL = 99
} sf_status;

typedef struct sf_scenario sf_scenario;
typedef struct sf_result sf_result;
typedef struct sf_surface sf_surface;

SF_API const char* sf_version(void);
SF_API const char* sf_status_string(sf_status status);
/* Message of the last failure on this thread; empty after success. */
SF_API const char* sf_last_error(void);

/* Scenarios. */
SF_API sf_status sf_scenario_parse(const char* json_text, sf_scenario** out);
SF_API sf_status sf_scenario_load(const char* path, sf_scenario** out);
SF_API void sf_scenario_free(sf_scenario* scenario);
SF_API sf_status sf_scenario_set_seed(sf_scenario* scenario, uint64_t seed);
SF_API uint64_t sf_scenario_seed(const sf_scenario* scenario);
/* One of spectrum, flow, ancient, rigidity, schauder, width. Owned by the scenario. */
SF_API const char* sf_scenario_experiment(const sf_scenario* scenario);
/* Default output directory from the document, or "" when absent. */
SF_API const char* sf_scenario_output(const sf_scenario* scenario);
/* Canonical configuration JSON with defaults filled in. Owned by the scenario. */
SF_API const char* sf_scenario_canonical(const sf_scenario* scenario);

/* Runs the scenario, writing its files into out_dir. */
SF_API sf_status sf_scenario_run(const sf_scenario* scenario, const char* out_dir, sf_result** out);
SF_API size_t sf_result_num_files(const sf_result* result);
SF_API const char* sf_result_file(const sf_result* result, size_t index);
SF_API const char* sf_result_summary(const sf_result* result);
SF_API void sf_result_free(sf_result* result);

/* Latitude sphere at angle s in S^n on an icosphere of the given level
   (s = 0 is the totally geodesic equator). */
SF_API sf_status sf_surface_latitude(int level, int n, double s, sf_surface** out);
SF_API void sf_surface_free(sf_surface* surface);
SF_API int sf_surface_num_vertices(const sf_surface* surface);
SF_API sf_status sf_surface_area(const sf_surface* surface, double* area);
/* F = area + int |H|^2 - 4 pi. */
SF_API sf_status sf_surface_f_functional(const sf_surface* surface, double* value);
SF_API sf_status sf_surface_gauss_bonnet_defect(const sf_surface* surface, double* defect);
/* k smallest Jacobi eigenvalues into eigenvalues[0..k-1]. */
SF_API sf_status sf_surface_jacobi_spectrum(const sf_surface* surface, int k, double* eigenvalues);

#ifdef __cplusplus
}
#endif

#endif /* SPHEREFLOW_H */
