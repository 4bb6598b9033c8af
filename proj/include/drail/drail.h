#ifndef DRAIL_DRAIL_H_
#define DRAIL_DRAIL_H_

/* C interface to the drail library. Objects are opaque handles owned by the
 * caller and released with the matching *_free function. Every call returns a
 * drail_status; on failure drail_last_error() describes the problem (the
 * message is per thread and valid until the next failing call). Strings
 * returned through char** are freed with drail_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define DRAIL_API __declspec(dllexport)
#elif defined(DRAIL_BUILDING_LIBRARY)
#  define DRAIL_API __attribute__((visibility("default")))
#else
#  define DRAIL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum drail_status {
  DRAIL_OK = 0,
  DRAIL_ERR_INTERNAL = 1,
  DRAIL_ERR_INVALID = 2, /* bad argument, schema violation */
  DRAIL_ERR_NUMERIC = 3, /* NaN / inf during training */
  DRAIL_ERR_FORMAT = 4,  /* corrupt or mismatched file */
  DRAIL_ERR_IO = 5
} drail_status;

typedef struct drail_dataset drail_dataset;
typedef struct drail_config drail_config;
typedef struct drail_policy drail_policy;

typedef enum drail_grid_value {
  DRAIL_GRID_PROBABILITY = 0,
  DRAIL_GRID_LOGIT = 1
} drail_grid_value;

DRAIL_API const char* drail_version(void);
DRAIL_API const char* drail_last_error(void);
DRAIL_API void drail_string_free(char* s);

/* expert data */
DRAIL_API drail_status drail_dataset_generate(const char* env, size_t n,
                                              uint64_t seed, double noise_scale,
                                              drail_dataset** out);
DRAIL_API drail_status drail_dataset_load(const char* path, drail_dataset** out);
DRAIL_API drail_status drail_dataset_save(const drail_dataset* ds, const char* path);
DRAIL_API size_t drail_dataset_transitions(const drail_dataset* ds);
DRAIL_API size_t drail_dataset_trajectories(const drail_dataset* ds);
DRAIL_API void drail_dataset_free(drail_dataset* ds);

/* training configs: JSON text, validated when resolved or trained */
DRAIL_API drail_status drail_config_from_json(const char* json, drail_config** out);
DRAIL_API drail_status drail_config_set(drail_config* cfg, const char* assignment);
DRAIL_API drail_status drail_config_resolve(const drail_config* cfg, char** json_out);
DRAIL_API void drail_config_free(drail_config* cfg);

/* Runs training and writes policy, discriminator, metrics.csv and
 * manifest.json into run_dir. threads < 1 means 1. */
DRAIL_API drail_status drail_train(const drail_config* cfg, const char* run_dir,
                                   int threads, int verbose);

/* policies */
DRAIL_API drail_status drail_policy_load(const char* path, drail_policy** out);
/* The point-reach PD expert as a linear Gaussian policy. */
DRAIL_API drail_status drail_policy_scripted_expert(drail_policy** out);
DRAIL_API drail_status drail_policy_save(const drail_policy* p, const char* path);
DRAIL_API void drail_policy_free(drail_policy* p);

/* Evaluation report as JSON. */
DRAIL_API drail_status drail_evaluate(const drail_policy* p, const char* env,
                                      double noise_scale, int episodes,
                                      uint64_t seed, int stochastic,
                                      char** json_out);

/* Reward landscape of a 1-D discriminator checkpoint, written as CSV. */
DRAIL_API drail_status drail_reward_map(const char* checkpoint, int s_resolution,
                                        int a_resolution, int samples,
                                        uint64_t seed, drail_grid_value value,
                                        const char* out_path);

/* Header summary of a dataset or checkpoint file, as JSON. */
DRAIL_API drail_status drail_inspect(const char* path, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* DRAIL_DRAIL_H_ */
