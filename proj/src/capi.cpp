#include "asgd/asgd.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include "asgd/harness.hpp"

struct asgd_config {
  asgd::RunConfig cfg;
};

struct asgd_run {
  asgd::RunOutput out;
};

namespace {

thread_local std::string last_error;

asgd_status fail(asgd_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <typename F>
asgd_status guarded(F&& f) {
  last_error.clear();
  try {
    return f();
  } catch (const asgd::ConfigError& e) {
    return fail(ASGD_CONFIG, e.what());
  } catch (const asgd::DomainError& e) {
    return fail(ASGD_DOMAIN, e.what());
  } catch (const asgd::DataError& e) {
    return fail(ASGD_IO, e.what());
  } catch (const asgd::EngineError& e) {
    return fail(e.kind() == asgd::EngineError::Kind::Invalid ? ASGD_CONFIG : ASGD_RUNTIME, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(ASGD_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(ASGD_RUNTIME, e.what());
  } catch (...) {
    return fail(ASGD_RUNTIME, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* asgd_last_error(void) { return last_error.c_str(); }

const char* asgd_version(void) { return "1.0.0"; }

asgd_status asgd_config_from_json(const char* json, asgd_config** out) {
  if (!json || !out) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    asgd::Json j;
    try {
      j = asgd::Json::parse(json);
    } catch (const asgd::Json::parse_error& e) {
      throw asgd::ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    *out = new asgd_config{asgd::parse_config(j)};
    return ASGD_OK;
  });
}

asgd_status asgd_config_load(const char* path, asgd_config** out) {
  if (!path || !out) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (!std::ifstream(path)) return fail(ASGD_IO, std::string("cannot open '") + path + "'");
    *out = new asgd_config{asgd::load_config(path)};
    return ASGD_OK;
  });
}

asgd_status asgd_config_set_seed(asgd_config* cfg, uint64_t seed) {
  if (!cfg) return fail(ASGD_INVALID_ARGUMENT, "null config");
  cfg->cfg.seed = seed;
  cfg->cfg.raw["seed"] = seed;
  return ASGD_OK;
}

asgd_status asgd_config_set_backend(asgd_config* cfg, const char* backend) {
  if (!cfg || !backend) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  const std::string b = backend;
  if (b == "event")
    cfg->cfg.backend = asgd::Backend::Event;
  else if (b == "threaded")
    cfg->cfg.backend = asgd::Backend::Threaded;
  else
    return fail(ASGD_CONFIG, "backend: expected 'event' or 'threaded'");
  cfg->cfg.raw["backend"] = b;
  return ASGD_OK;
}

void asgd_config_free(asgd_config* cfg) { delete cfg; }

asgd_status asgd_run_execute(const asgd_config* cfg, int audit, asgd_run** out) {
  if (!cfg || !out) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto* run = new asgd_run{asgd::execute(cfg->cfg, audit != 0)};
    *out = run;
    if (run->out.audit && !run->out.audit->ok) return fail(ASGD_AUDIT, "audit failed: " + run->out.audit->report.dump());
    return ASGD_OK;
  });
}

asgd_status asgd_run_metrics_json(const asgd_run* run, char** out) {
  if (!run || !out) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = dup(run->out.metrics.dump(2));
    return ASGD_OK;
  });
}

asgd_status asgd_run_audit_json(const asgd_run* run, char** out) {
  if (!run || !out) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  if (!run->out.audit) return fail(ASGD_INVALID_ARGUMENT, "run was executed without audit");
  return guarded([&] {
    *out = dup(run->out.audit->report.dump(2));
    return ASGD_OK;
  });
}

asgd_status asgd_run_write_trace(const asgd_run* run, const char* path) {
  if (!run || !path) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::ofstream f(path);
    if (!f) return fail(ASGD_IO, std::string("cannot write '") + path + "'");
    asgd::write_trace_jsonl(run->out.result.trace, f);
    return f ? ASGD_OK : fail(ASGD_IO, "write failed");
  });
}

void asgd_run_free(asgd_run* run) { delete run; }

asgd_status asgd_schedule_csv(const char* params_json, char** out) {
  if (!params_json || !out) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    asgd::Json j;
    try {
      j = asgd::Json::parse(params_json);
    } catch (const asgd::Json::parse_error& e) {
      throw asgd::ConfigError("params", std::string("invalid JSON: ") + e.what());
    }
    *out = dup(asgd::schedule_csv(j));
    return ASGD_OK;
  });
}

asgd_status asgd_experiment_csv(const char* suite, const char* data_path, const char* test_path,
                                uint64_t seed, char** out) {
  if (!suite || !out) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    asgd::ExperimentOptions o;
    if (data_path) o.data_path = data_path;
    if (test_path) o.test_path = test_path;
    o.seed = seed;
    *out = dup(asgd::experiment_csv(suite, o));
    return ASGD_OK;
  });
}

asgd_status asgd_experiment_suites(char** out) {
  if (!out) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::string s;
    for (const auto& name : asgd::experiment_suites()) s += name + "\n";
    *out = dup(s);
    return ASGD_OK;
  });
}

asgd_status asgd_optimum_json(const asgd_config* cfg, char** out) {
  if (!cfg || !out) return fail(ASGD_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto prep = asgd::prepare(cfg->cfg);
    const auto opt = asgd::optimum_for(cfg->cfg, prep);
    asgd::Json j = {{"F_star", opt.F_star},   {"N", opt.N},
                    {"grad_norm", opt.grad_norm}, {"exact", opt.exact},
                    {"degenerate", opt.degenerate}, {"w_star", opt.w_star},
                    {"mu", prep.constants.mu},  {"L", prep.constants.L}};
    *out = dup(j.dump(2));
    return ASGD_OK;
  });
}

asgd_status asgd_grid_csv(const asgd_config* cfg, const double* grid, int count, char** out) {
  if (!cfg || !out || count < 0 || (count > 0 && !grid)) return fail(ASGD_INVALID_ARGUMENT, "bad argument");
  return guarded([&] {
    const auto g = count > 0 ? std::vector<double>(grid, grid + count) : asgd::default_grid();
    *out = dup(asgd::grid_csv(cfg->cfg, g));
    return ASGD_OK;
  });
}

void asgd_string_free(char* s) { std::free(s); }

}
