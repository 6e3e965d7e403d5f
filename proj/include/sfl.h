/* C API for the successor-feature landmark library.
 *
 * All state lives behind opaque handles; every function returns a status
 * code (SFL_OK on success) and the last error message is retrievable per
 * thread via sfl_last_error(). Configuration keys are "section.name"
 * strings, e.g. "run.mode", "sf.gamma"; sfl_run() dispatches on "run.mode"
 * and writes its artifacts under "run.out_dir".
 */
#ifndef SFL_H
#define SFL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SFL_API __declspec(dllexport)
#else
#define SFL_API __attribute__((visibility("default")))
#endif

enum {
  SFL_OK = 0,
  SFL_ERR_INVALID_ARG = 1,
  SFL_ERR_CONFIG = 2,
  SFL_ERR_PARSE = 3,
  SFL_ERR_STATE_CAP = 4,
  SFL_ERR_CHECKPOINT = 5,
  SFL_ERR_BUFFER_TOO_SMALL = 6,
  SFL_ERR_RUNTIME = 7
};

typedef struct sfl_config sfl_config;

SFL_API const char* sfl_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
SFL_API const char* sfl_last_error(void);

SFL_API sfl_config* sfl_config_new(void);
SFL_API void sfl_config_free(sfl_config* cfg);

SFL_API int sfl_config_set(sfl_config* cfg, const char* key, const char* value);

/* Copies the value into out (NUL-terminated). Fails with
 * SFL_ERR_BUFFER_TOO_SMALL if cap cannot hold it. */
SFL_API int sfl_config_get(const sfl_config* cfg, const char* key, char* out,
                           size_t cap);

/* INI-style file with [section] headers and key = value lines. */
SFL_API int sfl_config_load_file(sfl_config* cfg, const char* path);

SFL_API uint64_t sfl_config_hash(const sfl_config* cfg);

/* Runs the configured mode. When summary is non-null the run's JSON summary
 * is copied into it (NUL-terminated; SFL_ERR_BUFFER_TOO_SMALL if it does not
 * fit). A nonzero run outcome (e.g. replay verification failure) surfaces as
 * SFL_ERR_RUNTIME with the summary still written. */
SFL_API int sfl_run(const sfl_config* cfg, char* summary, size_t summary_cap);

#ifdef __cplusplus
}
#endif

#endif /* SFL_H */
