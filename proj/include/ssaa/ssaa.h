/*
 * C interface to the ssaa sparse adversarial attack engine.
 *
 * Objects are opaque handles created by ssaa_*_create/load/train functions and
 * released with the matching *_free. Every fallible call returns an
 * ssaa_status; on failure ssaa_last_error() holds a message for the calling
 * thread until its next failing call. Configurations and results cross the
 * boundary as UTF-8 JSON strings; strings returned through char** must be
 * released with ssaa_string_free.
 */
#ifndef SSAA_H
#define SSAA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SSAA_BUILDING_LIBRARY)
#    define SSAA_API __declspec(dllexport)
#  else
#    define SSAA_API __declspec(dllimport)
#  endif
#else
#  define SSAA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ssaa_status {
  SSAA_OK = 0,
  SSAA_ERR_INVALID_ARGUMENT = 1,
  SSAA_ERR_DIMENSION = 2,
  SSAA_ERR_RANGE = 3,
  SSAA_ERR_FORMAT = 4,
  SSAA_ERR_IO = 5,
  SSAA_ERR_PARAMETER = 6,
  SSAA_ERR_CONFIG = 7,
  SSAA_ERR_EXHAUSTED = 8,
  SSAA_ERR_DIVERGENCE = 9,
  SSAA_ERR_PROBE_DOMAIN = 10,
  SSAA_ERR_CONSISTENCY = 11,
  SSAA_ERR_INTERNAL = 99
} ssaa_status;

typedef struct ssaa_model ssaa_model;
typedef struct ssaa_dataset ssaa_dataset;

SSAA_API const char* ssaa_version(void);
SSAA_API const char* ssaa_status_string(ssaa_status status);
SSAA_API const char* ssaa_last_error(void);
SSAA_API void ssaa_string_free(char* str);

/* Datasets ---------------------------------------------------------------- */

SSAA_API ssaa_status ssaa_dataset_load_idx(const char* images_path, const char* labels_path, ssaa_dataset** out);
SSAA_API ssaa_status ssaa_dataset_synthetic(size_t classes, size_t per_class, size_t dim, uint64_t seed,
                                            ssaa_dataset** out);
/* Source description: {"kind":"synthetic",...} or {"kind":"idx",...}. */
SSAA_API ssaa_status ssaa_dataset_from_source(const char* source_json, ssaa_dataset** out);
SSAA_API ssaa_status ssaa_dataset_write_idx(const ssaa_dataset* dataset, const char* images_path,
                                            const char* labels_path);
SSAA_API size_t ssaa_dataset_size(const ssaa_dataset* dataset);
SSAA_API size_t ssaa_dataset_input_size(const ssaa_dataset* dataset);
SSAA_API size_t ssaa_dataset_num_classes(const ssaa_dataset* dataset);
/* Copies sample `index` into values[0..capacity) and writes its label. */
SSAA_API ssaa_status ssaa_dataset_get(const ssaa_dataset* dataset, size_t index, double* values, size_t capacity,
                                      size_t* label);
SSAA_API void ssaa_dataset_free(ssaa_dataset* dataset);

/* Reference model ------------------------------------------------------- */

/* train_config_json keys (all optional): hidden, activation, epochs,
 * batch_size, learning_rate, momentum, seed. */
SSAA_API ssaa_status ssaa_model_train(const ssaa_dataset* dataset, const char* train_config_json, ssaa_model** out);
SSAA_API ssaa_status ssaa_model_load(const char* path, ssaa_model** out);
SSAA_API ssaa_status ssaa_model_save(const ssaa_model* model, const char* path);
SSAA_API size_t ssaa_model_input_size(const ssaa_model* model);
SSAA_API size_t ssaa_model_num_classes(const ssaa_model* model);
SSAA_API double ssaa_model_train_accuracy(const ssaa_model* model);
SSAA_API ssaa_status ssaa_model_accuracy(const ssaa_model* model, const ssaa_dataset* dataset, double* out);
SSAA_API ssaa_status ssaa_model_forward(const ssaa_model* model, const double* x, size_t n, double* probs,
                                        size_t num_classes);
SSAA_API ssaa_status ssaa_model_grad_class(const ssaa_model* model, const double* x, size_t n, size_t cls,
                                           double* grad);
SSAA_API ssaa_status ssaa_model_label(const ssaa_model* model, const double* x, size_t n, size_t* label);
SSAA_API void ssaa_model_free(ssaa_model* model);

/* Attacks and campaigns ------------------------------------------------- */

/* attack_config_json keys: variant, mode, target, n_samples, max_iter, seed,
 * stream, trace. Result JSON carries the flattened record, x_adv and, when
 * tracing, the per-iteration history. */
SSAA_API ssaa_status ssaa_attack_run(const ssaa_model* model, const double* x, size_t n,
                                     const char* attack_config_json, char** result_json);

/* Campaign config JSON uses the "config" block schema of the report. The
 * first form loads model and dataset from the paths it names. */
SSAA_API ssaa_status ssaa_campaign_run(const char* campaign_config_json, char** report_json);
SSAA_API ssaa_status ssaa_campaign_run_with(const ssaa_model* model, const ssaa_dataset* dataset,
                                            const char* campaign_config_json, char** report_json);
/* CSV flattening of a report's per-sample records. */
SSAA_API ssaa_status ssaa_report_to_csv(const char* report_json, char** csv);

/* probe_config_json keys: component, class, thetas, trials, noise
 * ("folded"|"symmetric"), seed, stream. Output: {"config":...,"version":...,
 * "probe":[rows]}. */
SSAA_API ssaa_status ssaa_probe_run(const ssaa_model* model, const double* x, size_t n,
                                    const char* probe_config_json, char** out_json);

/* axis: "ns" or "max-iter". Output is CSV with a header row. */
SSAA_API ssaa_status ssaa_curves(const char* const* report_jsons, size_t count, const char* axis, char** csv);

#ifdef __cplusplus
}
#endif

#endif /* SSAA_H */
