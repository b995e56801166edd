/* C API of the steinprune shared library.
 *
 * All functions return sp_status; SP_OK is 0. On failure, sp_last_error()
 * returns a thread-local message describing what went wrong. Handles are
 * opaque and must be released with their matching _free function.
 */
#ifndef STEINPRUNE_H
#define STEINPRUNE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SP_API __declspec(dllexport)
#else
#define SP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sp_status {
    SP_OK = 0,
    SP_ERR_CONFIG = 2,            /* invalid config, arguments, or file format */
    SP_ERR_DIVERGED = 3,          /* training loss went non-finite; trace retained */
    SP_ERR_SWEEP_ALL_FAILED = 4,  /* no sweep cell succeeded */
    SP_ERR_IO = 10,
    SP_ERR_INTERNAL = 12
} sp_status;

SP_API const char* sp_version(void);

/* Thread-local message for the most recent failing call on this thread. */
SP_API const char* sp_last_error(void);

/* ---- configs ---- */

typedef struct sp_config sp_config;

SP_API sp_status sp_config_load(const char* path, sp_config** out);
SP_API sp_status sp_config_parse(const char* text, sp_config** out);
SP_API void sp_config_free(sp_config* config);

/* Writes the 16-hex-digit canonical config hash; buflen must be >= 17. */
SP_API sp_status sp_config_hash_hex(const sp_config* config, char* buf, size_t buflen);

/* ---- checkpoints ---- */

typedef struct sp_checkpoint sp_checkpoint;

typedef struct sp_checkpoint_info {
    uint32_t format_version;
    uint32_t particles;
    uint32_t layers;
    uint64_t param_count;  /* M, per particle */
    uint64_t global_step;
    uint64_t epoch;
} sp_checkpoint_info;

SP_API sp_status sp_checkpoint_open(const char* path, sp_checkpoint** out);
SP_API sp_status sp_checkpoint_query(const sp_checkpoint* checkpoint, sp_checkpoint_info* out);
SP_API void sp_checkpoint_free(sp_checkpoint* checkpoint);

/* ---- commands ----
 *
 * seed_override: pass has_seed_override = 0 to use the config seed.
 * Output files land in out_dir (created if missing).
 */

SP_API sp_status sp_train(const sp_config* config, const char* resume_checkpoint_or_null,
                          const char* out_dir, int has_seed_override, uint64_t seed_override);

/* method: "dllp_slab" (mode ignored, value = gate threshold or NaN for the
 * config default) or "magnitude" with mode "sparsity" | "threshold". */
SP_API sp_status sp_prune(const sp_config* config, const char* checkpoint_path,
                          const char* method, const char* mode, double value,
                          const char* out_dir, int has_seed_override, uint64_t seed_override);

SP_API sp_status sp_analyze(const char* checkpoint_path, uint32_t bins, const char* out_dir);

/* kind: "aleatoric" | "epistemic". Returns SP_ERR_SWEEP_ALL_FAILED when no
 * cell succeeded; individual failed cells are recorded with status=failed. */
SP_API sp_status sp_sweep(const sp_config* config, const char* kind, const char* out_dir,
                          int has_seed_override, uint64_t seed_override);

typedef struct sp_efficiency_report {
    double crlb;
    double estimator_variance;
    double efficiency;
} sp_efficiency_report;

/* noise_case: "clean" | "model_noise" | "data_noise" | "both". */
SP_API sp_status sp_crlb_eval(const char* noise_case, double eps2, double alpha2, double beta2,
                              sp_efficiency_report* out);

/* layer < 0 exports every layer with at least 100 weights. */
SP_API sp_status sp_export_hist(const char* checkpoint_path, uint32_t bins, int32_t layer,
                                const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* STEINPRUNE_H */
