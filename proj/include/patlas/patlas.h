/*
 * patlas: visual pattern discovery over tiled, labeled image corpora.
 *
 * C interface to the pattern-atlas core. Objects are opaque handles created
 * by *_load / *_fit / *_build style calls and released with the matching
 * *_free. Every fallible call returns a patlas_status; on failure the
 * message for the calling thread is available from patlas_last_error().
 *
 * Indices are 0-based. Strings returned by accessors are owned by the
 * handle and stay valid until it is freed.
 */
#ifndef PATLAS_PATLAS_H
#define PATLAS_PATLAS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PATLAS_BUILDING_LIBRARY)
#    define PATLAS_API __declspec(dllexport)
#  else
#    define PATLAS_API __declspec(dllimport)
#  endif
#else
#  define PATLAS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum patlas_status {
  PATLAS_OK = 0,
  PATLAS_ERR_INVALID_ARGUMENT = 1,
  PATLAS_ERR_IO = 2,
  PATLAS_ERR_FORMAT = 3,
  PATLAS_ERR_NUMERIC = 4,     /* zero vector, non-finite value */
  PATLAS_ERR_DEGENERATE = 5,  /* zero variance, unfillable clusters */
  PATLAS_ERR_NOT_FOUND = 6,   /* reference to a missing cluster/label */
  PATLAS_ERR_INTERNAL = 99
} patlas_status;

PATLAS_API const char* patlas_version(void);
PATLAS_API const char* patlas_status_string(patlas_status status);
/* Message of the last failed call on this thread ("" if none). */
PATLAS_API const char* patlas_last_error(void);

/* ---- feature sets ------------------------------------------------------ */

typedef struct patlas_feature_set patlas_feature_set;

PATLAS_API patlas_status patlas_feature_set_load(const char* path, patlas_feature_set** out);
PATLAS_API patlas_status patlas_feature_set_save(const patlas_feature_set* fs, const char* path);
PATLAS_API patlas_status patlas_feature_set_normalize(const patlas_feature_set* fs,
                                                      patlas_feature_set** out);
/* Records of one diagnosis; the label set is kept. */
PATLAS_API patlas_status patlas_feature_set_select(const patlas_feature_set* fs,
                                                   const char* diagnosis,
                                                   patlas_feature_set** out);
PATLAS_API void patlas_feature_set_free(patlas_feature_set* fs);

PATLAS_API size_t patlas_feature_set_size(const patlas_feature_set* fs);
PATLAS_API size_t patlas_feature_set_dim(const patlas_feature_set* fs);
PATLAS_API int patlas_feature_set_is_normalized(const patlas_feature_set* fs);
PATLAS_API size_t patlas_feature_set_label_count(const patlas_feature_set* fs);
PATLAS_API const char* patlas_feature_set_label(const patlas_feature_set* fs, size_t i);
PATLAS_API size_t patlas_feature_set_image_count(const patlas_feature_set* fs);
PATLAS_API const char* patlas_feature_set_tile_id(const patlas_feature_set* fs, size_t i);
PATLAS_API const char* patlas_feature_set_image_id(const patlas_feature_set* fs, size_t i);
PATLAS_API const char* patlas_feature_set_diagnosis(const patlas_feature_set* fs, size_t i);
/* Pointer to dim() doubles for record i. */
PATLAS_API const double* patlas_feature_set_features(const patlas_feature_set* fs, size_t i);

/* ---- preprocessing ----------------------------------------------------- */

typedef struct patlas_tile_spec {
  int tile_size;              /* default 128 */
  double overlap_fraction;    /* default 0.25 */
  double min_lesion_fraction; /* default 0.60 */
} patlas_tile_spec;

PATLAS_API patlas_tile_spec patlas_tile_spec_default(void);

/* Kept window origins for a mask of width*height bytes (nonzero = lesion).
 * Writes up to `capacity` (x, y) pairs into xs/ys and the total count into
 * *count; pass capacity 0 to query the count. */
PATLAS_API patlas_status patlas_tile_origins(const uint8_t* mask, int width, int height,
                                             const patlas_tile_spec* spec, int* xs, int* ys,
                                             size_t capacity, size_t* count);

/* In-place Shades-of-Gray correction of interleaved RGB pixels. *warning is
 * set to 1 when the input had a zero channel estimate and was left as is. */
PATLAS_API patlas_status patlas_color_constancy(uint8_t* rgb, int width, int height,
                                                double minkowski_p, int* warning);

typedef enum patlas_color_scope {
  PATLAS_COLOR_PER_TILE = 0,
  PATLAS_COLOR_PER_IMAGE = 1,
  PATLAS_COLOR_NONE = 2
} patlas_color_scope;

typedef struct patlas_tiling_options patlas_tiling_options;

PATLAS_API patlas_status patlas_tiling_options_create(patlas_tiling_options** out);
PATLAS_API void patlas_tiling_options_free(patlas_tiling_options* opts);
PATLAS_API patlas_status patlas_tiling_options_set_spec(patlas_tiling_options* opts,
                                                        const patlas_tile_spec* spec);
PATLAS_API patlas_status patlas_tiling_options_set_color(patlas_tiling_options* opts,
                                                         patlas_color_scope scope,
                                                         double minkowski_p);
PATLAS_API patlas_status patlas_tiling_options_set_seed(patlas_tiling_options* opts,
                                                        uint64_t seed);
PATLAS_API patlas_status patlas_tiling_options_set_threads(patlas_tiling_options* opts,
                                                           unsigned threads);
PATLAS_API patlas_status patlas_tiling_options_set_image_cap(patlas_tiling_options* opts,
                                                             const char* label, size_t cap);
PATLAS_API patlas_status patlas_tiling_options_set_tile_cap(patlas_tiling_options* opts,
                                                            const char* label, size_t cap);

typedef struct patlas_tiling_report {
  size_t images_in;
  size_t images_used;
  size_t images_without_tiles;
  size_t tiles_written;
  size_t color_warnings;
} patlas_tiling_report;

PATLAS_API patlas_status patlas_tile_corpus(const char* manifest_csv, const char* out_dir,
                                            const patlas_tiling_options* opts,
                                            patlas_tiling_report* report);

/* ---- clustering -------------------------------------------------------- */

typedef struct patlas_cluster_model patlas_cluster_model;
typedef struct patlas_assignment patlas_assignment;

typedef struct patlas_kmeans_params {
  int k;
  uint64_t seed;
  int max_iter;   /* default 300 */
  double tol;     /* default 1e-6, relative inertia improvement */
  unsigned threads;
} patlas_kmeans_params;

PATLAS_API patlas_kmeans_params patlas_kmeans_params_default(void);

PATLAS_API patlas_status patlas_cosine_distance(const double* u, const double* v, size_t n,
                                                double* out);

/* fs must be normalized. */
PATLAS_API patlas_status patlas_kmeans_fit(const patlas_feature_set* fs,
                                           const patlas_kmeans_params* params,
                                           patlas_cluster_model** model,
                                           patlas_assignment** assignment);
PATLAS_API patlas_status patlas_assign(const patlas_cluster_model* model,
                                       const patlas_feature_set* fs, unsigned threads,
                                       patlas_assignment** out);

PATLAS_API size_t patlas_model_k(const patlas_cluster_model* m);
PATLAS_API size_t patlas_model_dim(const patlas_cluster_model* m);
PATLAS_API double patlas_model_inertia(const patlas_cluster_model* m);
PATLAS_API int patlas_model_iterations(const patlas_cluster_model* m);
PATLAS_API const double* patlas_model_centroid(const patlas_cluster_model* m, size_t i);
PATLAS_API patlas_status patlas_model_save(const patlas_cluster_model* m, const char* path);
PATLAS_API patlas_status patlas_model_load(const char* path, patlas_cluster_model** out);
PATLAS_API void patlas_model_free(patlas_cluster_model* m);

PATLAS_API size_t patlas_assignment_size(const patlas_assignment* a);
PATLAS_API int patlas_assignment_cluster(const patlas_assignment* a, size_t i);
PATLAS_API double patlas_assignment_distance(const patlas_assignment* a, size_t i);
PATLAS_API patlas_status patlas_assignment_save(const patlas_assignment* a,
                                                const patlas_feature_set* fs, const char* path);
PATLAS_API patlas_status patlas_assignment_load(const patlas_feature_set* fs, const char* path,
                                                patlas_assignment** out);
PATLAS_API void patlas_assignment_free(patlas_assignment* a);

/* ---- model selection --------------------------------------------------- */

PATLAS_API patlas_status patlas_compute_w(const patlas_feature_set* fs,
                                          const patlas_cluster_model* model,
                                          const patlas_assignment* assignment, double* out);

typedef struct patlas_sweep_params {
  int k_min; /* default 2 */
  int k_max; /* default 50 */
  uint64_t seed;
  int max_iter;
  double tol;
  unsigned threads;
} patlas_sweep_params;

PATLAS_API patlas_sweep_params patlas_sweep_params_default(void);

typedef struct patlas_sweep patlas_sweep;

/* fs must be normalized. */
PATLAS_API patlas_status patlas_sweep_run(const patlas_feature_set* fs,
                                          const patlas_sweep_params* params,
                                          patlas_sweep** out);
PATLAS_API size_t patlas_sweep_size(const patlas_sweep* s);
PATLAS_API int patlas_sweep_k(const patlas_sweep* s, size_t i);
PATLAS_API double patlas_sweep_inertia(const patlas_sweep* s, size_t i);
PATLAS_API double patlas_sweep_w(const patlas_sweep* s, size_t i);
/* 0 when no knee was found. */
PATLAS_API int patlas_sweep_elbow_k(const patlas_sweep* s);
PATLAS_API int patlas_sweep_compactness_k(const patlas_sweep* s);
PATLAS_API size_t patlas_sweep_flagged_increases(const patlas_sweep* s);
/* Base seed of the sweep; the model for k was fitted with seed + k. */
PATLAS_API uint64_t patlas_sweep_seed(const patlas_sweep* s);
/* Writes the JSON result and a k,inertia,W CSV. */
PATLAS_API patlas_status patlas_sweep_save(const patlas_sweep* s, const char* json_path,
                                           const char* csv_path);
PATLAS_API patlas_status patlas_sweep_load(const char* json_path, patlas_sweep** out);
PATLAS_API void patlas_sweep_free(patlas_sweep* s);

/* *out_k = 0 with PATLAS_OK when the curve has no knee. */
PATLAS_API patlas_status patlas_select_k_elbow(const int* ks, const double* curve, size_t n,
                                               int* out_k);
PATLAS_API patlas_status patlas_select_k_compactness(const int* ks, const double* w,
                                                     size_t n, int* out_k);

/* ---- catalog ----------------------------------------------------------- */

typedef struct patlas_catalog patlas_catalog;

/* A catalog collects per-diagnosis cluster entries for one selection method. */
PATLAS_API patlas_status patlas_catalog_create(const char* method, patlas_catalog** out);
PATLAS_API patlas_status patlas_catalog_add(patlas_catalog* cat, const char* diagnosis,
                                            int chosen_k, const patlas_feature_set* fs,
                                            const patlas_cluster_model* model,
                                            const patlas_assignment* assignment);
PATLAS_API patlas_status patlas_catalog_ingest_annotations(patlas_catalog* cat,
                                                           const char* csv_path);
PATLAS_API size_t patlas_catalog_cluster_count(const patlas_catalog* cat, const char* diagnosis);
PATLAS_API size_t patlas_catalog_non_informative(const patlas_catalog* cat,
                                                 const char* diagnosis);
PATLAS_API double patlas_catalog_redundancy(const patlas_catalog* cat, const char* diagnosis);
/* Diagnoses in lexicographic order; NULL when i is out of range. */
PATLAS_API size_t patlas_catalog_diagnosis_count(const patlas_catalog* cat);
PATLAS_API const char* patlas_catalog_diagnosis(const patlas_catalog* cat, size_t i);
PATLAS_API const char* patlas_catalog_method(const patlas_catalog* cat);
PATLAS_API patlas_status patlas_catalog_save_json(const patlas_catalog* cat, const char* path);
PATLAS_API patlas_status patlas_catalog_load_json(const char* path, patlas_catalog** out);
/* HTML pages per diagnosis plus catalog.json in out_dir. */
PATLAS_API patlas_status patlas_catalog_render(const patlas_catalog* cat, const char* tile_dir,
                                               const char* out_dir, size_t* warnings);
/* Summary JSON across catalogs (one per method). */
PATLAS_API patlas_status patlas_catalog_summarize(const patlas_catalog* const* cats,
                                                  size_t count, const char* json_path);
PATLAS_API void patlas_catalog_free(patlas_catalog* cat);

/* ---- classifier -------------------------------------------------------- */

typedef struct patlas_probability_table patlas_probability_table;
typedef struct patlas_predictions patlas_predictions;

PATLAS_API patlas_status patlas_probability_table_build(const patlas_feature_set* train,
                                                        const patlas_assignment* assignment,
                                                        size_t k,
                                                        patlas_probability_table** out);
PATLAS_API const double* patlas_probability_table_row(const patlas_probability_table* t,
                                                      size_t cluster);
PATLAS_API patlas_status patlas_probability_table_save(const patlas_probability_table* t,
                                                       const char* path);
PATLAS_API patlas_status patlas_probability_table_load(const char* path,
                                                       patlas_probability_table** out);
PATLAS_API void patlas_probability_table_free(patlas_probability_table* t);

/* lesion_list_csv (lesion_id,true_label) may be NULL; listed lesions without
 * tiles become excluded predictions. */
PATLAS_API patlas_status patlas_classify(const patlas_feature_set* test,
                                         const patlas_cluster_model* model,
                                         const patlas_probability_table* table,
                                         const char* lesion_list_csv, unsigned threads,
                                         patlas_predictions** out);
PATLAS_API size_t patlas_predictions_size(const patlas_predictions* p);
PATLAS_API patlas_status patlas_predictions_save(const patlas_predictions* p, const char* path);
PATLAS_API patlas_status patlas_predictions_load(const char* path, patlas_predictions** out);
PATLAS_API void patlas_predictions_free(patlas_predictions* p);

typedef struct patlas_evaluation_summary {
  size_t n_lesions;
  size_t n_excluded;
  size_t n_scored;
  double accuracy;
  double accuracy_ci_lo; /* Wilson 95% */
  double accuracy_ci_hi;
  double mean_recall;
} patlas_evaluation_summary;

PATLAS_API patlas_status patlas_evaluate(const patlas_predictions* p, const char* json_path,
                                         patlas_evaluation_summary* summary);

/* ---- statistics -------------------------------------------------------- */

typedef struct patlas_t_test {
  double mean_diff;
  double ci_lo;
  double ci_hi;
  double t_statistic;
  int df;
  double p_value;
  int normality_advisory;
} patlas_t_test;

PATLAS_API patlas_status patlas_one_sample_t(const double* differences, size_t n,
                                             patlas_t_test* out);
PATLAS_API patlas_status patlas_holm_correct(const double* p_values, size_t n,
                                             double* adjusted);

#ifdef __cplusplus
}
#endif

#endif /* PATLAS_PATLAS_H */
