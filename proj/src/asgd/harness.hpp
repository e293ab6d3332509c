#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "asgd/engine.hpp"

namespace asgd {

using Json = nlohmann::json;

/// Invalid configuration; `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct SyntheticSpec {
  std::size_t samples = 1000;
  std::size_t dim = 10;
  double mean = 1.0;
  double stddev = 1.0;
  std::uint64_t seed = 0;
};

/// Parsed run configuration. Defaults follow the experiment defaults: five nodes,
/// lag gate with d = 1, K = 20000, linear sample sizes 50 i, eta_0 / (1 + beta t)
/// steps with eta_0 = 0.01 and beta = 0.001 (eta_0 / (1 + beta sqrt(t)) with
/// eta_0 = 0.003 and beta = 0.01 for plain convex problems), lambda = 1/M.
struct RunConfig {
  Json raw;
  ProblemKind problem = ProblemKind::LogisticRidge;
  std::optional<double> lambda;
  std::string data_path;
  std::string test_path;
  std::optional<SyntheticSpec> synthetic;
  int nodes = 5;
  std::vector<double> p;
  PartitionMode partition = PartitionMode::Unbiased;
  std::uint64_t seed = 0;
  Json sample_schedule;
  Json step_schedule;
  StepMode step_mode = StepMode::PerRound;
  Json delay;
  Gate gate = Gate::Lag;
  std::int64_t d = 1;
  std::int64_t budget = 20000;
  std::int64_t checkpoint_interval = 1;
  Backend backend = Backend::Event;
  bool allow_incompatible = false;
  bool deterministic_split = false;
  double delivery_scale = 2.0;
  std::uint32_t step_jitter = 0;
  bool record_trace = true;
  std::optional<std::int64_t> optimum_budget;
};

RunConfig parse_config(const Json& j);
RunConfig load_config(const std::string& path);

/// Training/test data, problem and engine configuration built from a RunConfig.
struct Prepared {
  std::shared_ptr<DataSet> train;
  std::shared_ptr<DataSet> test;
  Smoothness constants;
  EngineConfig engine;
  std::int64_t last_round = 0;
  std::optional<CompatibilityReport> compatibility;
};

Prepared prepare(const RunConfig& cfg);

DataSet make_synthetic(const SyntheticSpec& spec, bool logistic_labels);

struct AuditSummary {
  bool ok = true;
  Json report;
};

struct RunOutput {
  Prepared prepared;
  RunResult result;
  std::optional<OptimumInfo> optimum;
  Json metrics;
  std::optional<AuditSummary> audit;
};

/// Runs a configuration; with `audit`, also checks the trace invariants.
RunOutput execute(const RunConfig& cfg, bool audit);

Json compute_metrics(const Prepared& prep, const RunResult& res, const OptimumInfo* opt,
                     std::int64_t checkpoint_interval = 1);
AuditSummary audit_run(const Prepared& prep, const RunResult& res);
OptimumInfo optimum_for(const RunConfig& cfg, const Prepared& prep);

/// One JSON object per gradient record.
void write_trace_jsonl(const RunTrace& trace, std::ostream& out);

/// Rows (i, s_i, cumulative, eta_bar, tau, compatible) for the schedule described by params.
std::string schedule_csv(const Json& params);

struct ExperimentOptions {
  std::string data_path = "data/a9a";
  std::string test_path = "data/a9a.t";
  std::uint64_t seed = 1;
};

std::vector<std::string> experiment_suites();
std::string experiment_csv(const std::string& suite, const ExperimentOptions& options);

/// Sweeps eta_0 (or eta for constant steps) over `grid`, picking the smallest final objective.
std::string grid_csv(const RunConfig& cfg, const std::vector<double>& grid);
std::vector<double> default_grid();

}  // namespace asgd
