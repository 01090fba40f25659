#include "mintime/mintime.h"

#include <cstring>
#include <string>

#include "mintime/config.hpp"
#include "mintime/errors.hpp"
#include "mintime/pipeline.hpp"

struct mintime_session {
  mintime::RunConfig config;
  std::string last_error;
};

namespace {

template <typename Fn>
mintime_status guarded(mintime_session* session, Fn&& fn) {
  if (!session) return MINTIME_ERROR_CONFIG;
  try {
    fn();
    session->last_error.clear();
    return MINTIME_OK;
  } catch (const mintime::ConfigError& e) {
    session->last_error = e.what();
    return MINTIME_ERROR_CONFIG;
  } catch (const mintime::NumericError& e) {
    session->last_error = e.what();
    return MINTIME_ERROR_NUMERIC;
  } catch (const mintime::DataError& e) {
    session->last_error = e.what();
    return MINTIME_ERROR_DATA;
  } catch (const std::exception& e) {
    session->last_error = e.what();
    return MINTIME_ERROR_INTERNAL;
  } catch (...) {
    session->last_error = "unknown error";
    return MINTIME_ERROR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* mintime_version(void) { return "0.1.0"; }

mintime_status mintime_session_create(mintime_session** out_session) {
  if (!out_session) return MINTIME_ERROR_CONFIG;
  try {
    *out_session = new mintime_session();
    return MINTIME_OK;
  } catch (...) {
    *out_session = nullptr;
    return MINTIME_ERROR_INTERNAL;
  }
}

void mintime_session_destroy(mintime_session* session) { delete session; }

const char* mintime_last_error(const mintime_session* session) {
  if (!session) return "null session";
  return session->last_error.c_str();
}

mintime_status mintime_config_set(mintime_session* session, const char* key, const char* value) {
  return guarded(session, [&] {
    if (!key || !value) throw mintime::ConfigError("config key and value must not be NULL");
    session->config.set(key, value);
  });
}

mintime_status mintime_config_load_file(mintime_session* session, const char* path) {
  return guarded(session, [&] {
    if (!path || !*path) throw mintime::ConfigError("config path must not be empty");
    session->config.load_file(path);
  });
}

mintime_status mintime_config_dump(mintime_session* session, char* buffer, size_t* size) {
  if (!session) return MINTIME_ERROR_CONFIG;
  if (!size) {
    session->last_error = "size pointer must not be NULL";
    return MINTIME_ERROR_CONFIG;
  }
  const std::string dump = session->config.dump();
  const size_t required = dump.size() + 1;
  if (!buffer) {
    *size = required;
    return MINTIME_OK;
  }
  if (*size < required) {
    *size = required;
    session->last_error = "buffer too small for config dump";
    return MINTIME_ERROR_CONFIG;
  }
  std::memcpy(buffer, dump.c_str(), required);
  *size = required;
  return MINTIME_OK;
}

mintime_status mintime_run_synth(mintime_session* session, const char* out_dir) {
  return guarded(session, [&] {
    if (!out_dir || !*out_dir) throw mintime::ConfigError("output directory must not be empty");
    mintime::pipeline::run_synth(session->config, out_dir);
  });
}

mintime_status mintime_run_cluster(mintime_session* session, const char* detections_manifest,
                                   const char* out_manifest) {
  return guarded(session, [&] {
    if (!detections_manifest || !*detections_manifest || !out_manifest || !*out_manifest)
      throw mintime::ConfigError("cluster needs a detections manifest and an output path");
    mintime::pipeline::run_cluster(session->config, detections_manifest, out_manifest);
  });
}

mintime_status mintime_run_assemble(mintime_session* session, const char* manifest,
                                    const char* out_sequences) {
  return guarded(session, [&] {
    if (!manifest || !*manifest || !out_sequences || !*out_sequences)
      throw mintime::ConfigError("assemble needs a manifest and an output path");
    mintime::pipeline::run_assemble(session->config, manifest, out_sequences);
  });
}

mintime_status mintime_run_train(mintime_session* session, const char* manifest,
                                 const char* checkpoint_dir) {
  return guarded(session, [&] {
    if (!manifest || !*manifest || !checkpoint_dir || !*checkpoint_dir)
      throw mintime::ConfigError("train needs a manifest and a checkpoint directory");
    mintime::pipeline::run_train(session->config, manifest, checkpoint_dir);
  });
}

mintime_status mintime_run_infer(mintime_session* session, const char* manifest,
                                 const char* checkpoint_dir, const char* out_json) {
  return guarded(session, [&] {
    if (!manifest || !*manifest || !checkpoint_dir || !*checkpoint_dir || !out_json || !*out_json)
      throw mintime::ConfigError("infer needs a manifest, a checkpoint and an output path");
    mintime::pipeline::run_infer(session->config, manifest, checkpoint_dir, out_json);
  });
}

mintime_status mintime_run_eval(mintime_session* session, const char* manifest,
                                const char* checkpoint_dir, const char* report_json,
                                const char* localization_json) {
  return guarded(session, [&] {
    if (!manifest || !*manifest || !checkpoint_dir || !*checkpoint_dir || !report_json ||
        !*report_json)
      throw mintime::ConfigError("eval needs a manifest, a checkpoint and a report path");
    mintime::pipeline::run_eval(session->config, manifest, checkpoint_dir, report_json,
                                localization_json ? localization_json : "");
  });
}

mintime_status mintime_run_stats(mintime_session* session, const char* manifest,
                                 const char* out_json) {
  return guarded(session, [&] {
    if (!manifest || !*manifest || !out_json || !*out_json)
      throw mintime::ConfigError("stats needs a manifest and an output path");
    mintime::pipeline::run_stats(session->config, manifest, out_json);
  });
}

mintime_status mintime_run_plot(mintime_session* session, const char* scores_json,
                                const char* out_dir) {
  return guarded(session, [&] {
    if (!scores_json || !*scores_json || !out_dir || !*out_dir)
      throw mintime::ConfigError("plot needs a scores file and an output directory");
    mintime::pipeline::run_plot(session->config, scores_json, out_dir);
  });
}

}  // extern "C"
