#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "asgd/asgd.h"

namespace {

int exit_code(asgd_status s) {
  switch (s) {
    case ASGD_OK:
      return 0;
    case ASGD_RUNTIME:
      return 2;
    case ASGD_AUDIT:
      return 3;
    default:
      return 1;
  }
}

int report(asgd_status s) {
  if (s != ASGD_OK) std::cerr << "error: " << asgd_last_error() << '\n';
  return exit_code(s);
}

bool emit(const char* text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    if (*text && text[std::char_traits<char>::length(text) - 1] != '\n') std::cout << '\n';
    return true;
  }
  std::ofstream f(path);
  f << text;
  if (!f) {
    std::cerr << "error: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

struct Common {
  std::string config;
  std::optional<uint64_t> seed;
  std::string backend;
  std::string out;
};

int load(const Common& c, asgd_config** cfg) {
  asgd_status s = asgd_config_load(c.config.c_str(), cfg);
  if (s != ASGD_OK) return report(s);
  if (c.seed) asgd_config_set_seed(*cfg, *c.seed);
  if (!c.backend.empty()) {
    s = asgd_config_set_backend(*cfg, c.backend.c_str());
    if (s != ASGD_OK) {
      asgd_config_free(*cfg);
      return report(s);
    }
  }
  return 0;
}

int run_command(const Common& c, bool audit, const std::string& trace, bool grid, bool audit_only) {
  asgd_config* cfg = nullptr;
  if (int rc = load(c, &cfg)) return rc;
  if (grid) {
    char* csv = nullptr;
    asgd_status s = asgd_grid_csv(cfg, nullptr, 0, &csv);
    asgd_config_free(cfg);
    if (s != ASGD_OK) return report(s);
    const bool ok = emit(csv, c.out);
    asgd_string_free(csv);
    return ok ? 0 : 1;
  }
  asgd_run* run = nullptr;
  const asgd_status s = asgd_run_execute(cfg, audit ? 1 : 0, &run);
  asgd_config_free(cfg);
  if (s != ASGD_OK && s != ASGD_AUDIT) return report(s);
  if (s == ASGD_AUDIT) std::cerr << "error: invariant audit failed\n";

  char* text = nullptr;
  if (audit_only)
    asgd_run_audit_json(run, &text);
  else
    asgd_run_metrics_json(run, &text);
  bool ok = emit(text, c.out);
  asgd_string_free(text);
  if (!trace.empty()) {
    const asgd_status ts = asgd_run_write_trace(run, trace.c_str());
    if (ts != ASGD_OK) ok = false, report(ts);
  }
  asgd_run_free(run);
  if (s == ASGD_AUDIT) return 3;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous SGD simulator with increasing sample sizes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(asgd_version()));

  Common run_opts;
  bool audit = false, grid = false;
  std::string trace;
  auto* run = app.add_subcommand("run", "Run one configuration and write metrics JSON");
  run->add_option("--config", run_opts.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", run_opts.seed, "Override the seed");
  run->add_flag("--audit", audit, "Check the delay invariants; exit 3 on failure");
  run->add_option("--backend", run_opts.backend, "event or threaded")->check(CLI::IsMember({"event", "threaded"}));
  run->add_option("--out", run_opts.out, "Metrics output path (default stdout)");
  run->add_option("--trace", trace, "Write the gradient trace as JSON lines");
  run->add_flag("--grid", grid, "Sweep eta0 over a geometric grid and report the best");

  Common audit_opts;
  std::string audit_trace;
  auto* aud = app.add_subcommand("audit", "Run with auditing and print the audit report");
  aud->add_option("--config", audit_opts.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
  aud->add_option("--seed", audit_opts.seed, "Override the seed");
  aud->add_option("--backend", audit_opts.backend, "event or threaded")->check(CLI::IsMember({"event", "threaded"}));
  aud->add_option("--out", audit_opts.out, "Report output path (default stdout)");
  aud->add_option("--trace", audit_trace, "Write the gradient trace as JSON lines");

  std::string sched_config, sched_json, sched_out;
  auto* sched = app.add_subcommand("schedule", "Print per-round schedule values as CSV");
  auto* sc_file = sched->add_option("--config", sched_config, "JSON file with schedule parameters")->check(CLI::ExistingFile);
  sched->add_option("--json", sched_json, "Schedule parameters as an inline JSON string")->excludes(sc_file);
  sched->add_option("--out", sched_out, "CSV output path (default stdout)");

  std::string suite, data_path = "data/a9a", test_path = "data/a9a.t", exp_out;
  uint64_t exp_seed = 1;
  bool list = false;
  auto* exp = app.add_subcommand("experiment", "Run an experiment suite and print a CSV summary");
  exp->add_option("suite", suite, "Suite name");
  exp->add_option("--data", data_path, "Training set in LIBSVM format");
  exp->add_option("--test", test_path, "Test set in LIBSVM format");
  exp->add_option("--seed", exp_seed, "Seed");
  exp->add_option("--out", exp_out, "CSV output path (default stdout)");
  exp->add_flag("--list", list, "List suite names");

  Common opt_opts;
  auto* opt = app.add_subcommand("optimum", "Compute w*, F* and N for a configuration");
  opt->add_option("--config", opt_opts.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
  opt->add_option("--seed", opt_opts.seed, "Override the seed");
  opt->add_option("--out", opt_opts.out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*run) return run_command(run_opts, audit, trace, grid, false);
  if (*aud) return run_command(audit_opts, true, audit_trace, false, true);

  if (*sched) {
    std::string params = sched_json;
    if (!sched_config.empty()) {
      std::ifstream f(sched_config);
      std::stringstream ss;
      ss << f.rdbuf();
      params = ss.str();
    }
    if (params.empty()) params = "{}";
    char* csv = nullptr;
    const asgd_status s = asgd_schedule_csv(params.c_str(), &csv);
    if (s != ASGD_OK) return report(s);
    const bool ok = emit(csv, sched_out);
    asgd_string_free(csv);
    return ok ? 0 : 1;
  }

  if (*exp) {
    char* text = nullptr;
    if (list || suite.empty()) {
      asgd_experiment_suites(&text);
      std::cout << text;
      asgd_string_free(text);
      return suite.empty() && !list ? 1 : 0;
    }
    const asgd_status s = asgd_experiment_csv(suite.c_str(), data_path.c_str(),
                                              test_path.empty() ? nullptr : test_path.c_str(), exp_seed, &text);
    if (s != ASGD_OK) return report(s);
    const bool ok = emit(text, exp_out);
    asgd_string_free(text);
    return ok ? 0 : 1;
  }

  if (*opt) {
    asgd_config* cfg = nullptr;
    if (int rc = load(opt_opts, &cfg)) return rc;
    char* text = nullptr;
    const asgd_status s = asgd_optimum_json(cfg, &text);
    asgd_config_free(cfg);
    if (s != ASGD_OK) return report(s);
    const bool ok = emit(text, opt_opts.out);
    asgd_string_free(text);
    return ok ? 0 : 1;
  }
  return 1;
}
