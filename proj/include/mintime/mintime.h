/*
 * mintime - multi-identity size-invariant video deepfake detection toolkit.
 *
 * C interface to the pipeline. A session owns one run configuration plus the
 * last error message; every stage function reads its knobs from the session
 * config (flat key=value pairs, see mintime_config_dump for the full list)
 * and exchanges data through files: JSON-lines manifests, MNTT tensor packs,
 * MNSQ sequence files, checkpoint directories and JSON reports.
 *
 * All functions taking a session are safe to call from one thread at a time
 * per session; distinct sessions are independent.
 */

#ifndef MINTIME_MINTIME_H
#define MINTIME_MINTIME_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum mintime_status {
  MINTIME_OK = 0,
  MINTIME_ERROR_INTERNAL = 1, /* unexpected failure; see mintime_last_error */
  MINTIME_ERROR_CONFIG = 2,   /* bad key, value, flag or missing input path */
  MINTIME_ERROR_DATA = 3,     /* invalid manifest/tensor/sequence content */
  MINTIME_ERROR_NUMERIC = 4   /* non-finite loss, degenerate mask, bad shape */
} mintime_status;

typedef struct mintime_session mintime_session;

const char* mintime_version(void);

mintime_status mintime_session_create(mintime_session** out_session);
void mintime_session_destroy(mintime_session* session);

/* Message describing the most recent failure on this session; never NULL. */
const char* mintime_last_error(const mintime_session* session);

/* Configuration. Unknown keys are rejected. Files hold one key=value per
 * line with '#' comments; later writes win. */
mintime_status mintime_config_set(mintime_session* session, const char* key, const char* value);
mintime_status mintime_config_load_file(mintime_session* session, const char* path);

/* Dump every key as "key=value\n" lines. Call with buffer == NULL to query
 * the required size (including the terminating NUL) through *size. */
mintime_status mintime_config_dump(mintime_session* session, char* buffer, size_t* size);

/* Pipeline stages. Paths named *_json accept "-" for stdout. */
mintime_status mintime_run_synth(mintime_session* session, const char* out_dir);
mintime_status mintime_run_cluster(mintime_session* session, const char* detections_manifest,
                                   const char* out_manifest);
mintime_status mintime_run_assemble(mintime_session* session, const char* manifest,
                                    const char* out_sequences);
mintime_status mintime_run_train(mintime_session* session, const char* manifest,
                                 const char* checkpoint_dir);
mintime_status mintime_run_infer(mintime_session* session, const char* manifest,
                                 const char* checkpoint_dir, const char* out_json);
/* localization_json may be NULL or empty to skip the per-video file. */
mintime_status mintime_run_eval(mintime_session* session, const char* manifest,
                                const char* checkpoint_dir, const char* report_json,
                                const char* localization_json);
mintime_status mintime_run_stats(mintime_session* session, const char* manifest,
                                 const char* out_json);
mintime_status mintime_run_plot(mintime_session* session, const char* scores_json,
                                const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MINTIME_MINTIME_H */
