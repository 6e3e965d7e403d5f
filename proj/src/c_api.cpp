#include "sfl.h"

#include <cstring>
#include <string>

#include "sfl/checkpoint.hpp"
#include "sfl/config.hpp"
#include "sfl/grid.hpp"
#include "sfl/run.hpp"

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

int copy_out(const std::string& value, char* out, size_t cap) {
  if (value.size() + 1 > cap) {
    return fail(SFL_ERR_BUFFER_TOO_SMALL,
                "buffer too small: need " + std::to_string(value.size() + 1) + " bytes");
  }
  std::memcpy(out, value.c_str(), value.size() + 1);
  return SFL_OK;
}

}  // namespace

extern "C" {

struct sfl_config {
  sfl::RunConfig cfg;
};

const char* sfl_version(void) { return "0.1.0"; }

const char* sfl_last_error(void) { return g_last_error.c_str(); }

sfl_config* sfl_config_new(void) { return new sfl_config(); }

void sfl_config_free(sfl_config* cfg) { delete cfg; }

int sfl_config_set(sfl_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(SFL_ERR_INVALID_ARG, "null argument");
  try {
    cfg->cfg.set(key, value);
    return SFL_OK;
  } catch (const sfl::ConfigError& e) {
    return fail(SFL_ERR_CONFIG, e.what());
  }
}

int sfl_config_get(const sfl_config* cfg, const char* key, char* out, size_t cap) {
  if (!cfg || !key || !out) return fail(SFL_ERR_INVALID_ARG, "null argument");
  try {
    return copy_out(cfg->cfg.get(key), out, cap);
  } catch (const sfl::ConfigError& e) {
    return fail(SFL_ERR_CONFIG, e.what());
  }
}

int sfl_config_load_file(sfl_config* cfg, const char* path) {
  if (!cfg || !path) return fail(SFL_ERR_INVALID_ARG, "null argument");
  try {
    cfg->cfg.load_file(path);
    return SFL_OK;
  } catch (const sfl::ConfigError& e) {
    return fail(SFL_ERR_CONFIG, e.what());
  }
}

uint64_t sfl_config_hash(const sfl_config* cfg) {
  return cfg ? cfg->cfg.hash() : 0;
}

int sfl_run(const sfl_config* cfg, char* summary, size_t summary_cap) {
  if (!cfg) return fail(SFL_ERR_INVALID_ARG, "null config");
  try {
    sfl::RunResult result = sfl::run(cfg->cfg);
    if (summary) {
      int rc = copy_out(result.summary.dump(), summary, summary_cap);
      if (rc != SFL_OK) return rc;
    }
    if (result.exit_code != 0) {
      return fail(SFL_ERR_RUNTIME, "run finished with a failure outcome");
    }
    g_last_error.clear();
    return SFL_OK;
  } catch (const sfl::ConfigError& e) {
    return fail(SFL_ERR_CONFIG, e.what());
  } catch (const sfl::ParseError& e) {
    return fail(SFL_ERR_PARSE, e.what());
  } catch (const sfl::StateCapError& e) {
    return fail(SFL_ERR_STATE_CAP, e.what());
  } catch (const sfl::CheckpointError& e) {
    return fail(SFL_ERR_CHECKPOINT, e.what());
  } catch (const std::exception& e) {
    return fail(SFL_ERR_RUNTIME, e.what());
  }
}

}  // extern "C"
