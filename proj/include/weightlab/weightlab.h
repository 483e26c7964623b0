#ifndef WEIGHTLAB_H
#define WEIGHTLAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define WL_API __declspec(dllexport)
#else
#define WL_API __attribute__((visibility("default")))
#endif

typedef enum {
  WL_OK = 0,
  WL_ERR_VALIDATION = 2,  /* bad input: malformed JSON, out-of-range parameters */
  WL_ERR_THRESHOLD = 3,   /* a verification check failed; outputs are still written */
  WL_ERR_INTERNAL = 4
} wl_status;

typedef struct wl_measure wl_measure;

/* Strings returned through char** outputs are owned by the caller and must be
   released with wl_string_free. */
WL_API void wl_string_free(char* s);

WL_API const char* wl_version(void);

/* Message of the last failed call on this thread, or "" if none. */
WL_API const char* wl_last_error(void);

WL_API wl_status wl_measure_generate(const char* params_json, wl_measure** out);
WL_API wl_status wl_measure_from_json(const char* text, wl_measure** out);
WL_API wl_status wl_measure_to_json(const wl_measure* m, char** out);
WL_API size_t wl_measure_size(const wl_measure* m);
WL_API int wl_measure_dim(const wl_measure* m);
WL_API double wl_measure_total_mass(const wl_measure* m);
WL_API void wl_measure_free(wl_measure* m);

/* Every constant of the pair over one cube family. threads <= 0 falls back to
   WEIGHTLAB_THREADS. */
WL_API wl_status wl_constants_report(const wl_measure* sigma, const wl_measure* omega, const char* config_json,
                                     int threads, char** out_json);

/* Comma separated experiment names. */
WL_API wl_status wl_experiment_names(char** out);

/* Runs a named experiment. out_csv may be NULL. Returns WL_ERR_THRESHOLD when a
   check fails, with both outputs filled in. */
WL_API wl_status wl_run_experiment(const char* name, const char* config_json, int threads, char** out_json,
                                   char** out_csv);

WL_API wl_status wl_cauchy_report(const char* config_json, int threads, char** out_json);

/* Merges experiment result documents into one CSV:
   experiment,parameter,x,estimate,stderr,slope,ratio */
WL_API wl_status wl_report_merge(const char* const* results_json, size_t count, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif
