#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "asgd/data.hpp"
#include "asgd/problems.hpp"
#include "asgd/schedules.hpp"

namespace asgd {

/// Fatal run-time failure of a simulation (deadlock or non-finite model values).
class EngineError : public std::runtime_error {
 public:
  enum class Kind { Deadlock, NonFinite, Invalid };
  EngineError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class Gate { Lag, Tau };
enum class Backend { Event, Threaded };

std::string to_string(Gate gate);
std::string to_string(Backend backend);

struct EngineConfig {
  Problem problem = Problem::quadratic_mean(1);
  std::shared_ptr<const DataSet> data;
  Partition partition;
  SampleSchedule samples = SampleSchedule::constant(1);
  StepSchedule steps = StepSchedule::constant(0.01);
  StepMode step_mode = StepMode::PerRound;
  /// Delay function for the tau gate and for audits; optional with the lag gate.
  std::optional<DelayFunction> delay;
  Gate gate = Gate::Lag;
  std::int64_t d = 1;
  std::int64_t budget = 20000;
  std::uint64_t seed = 0;
  bool deterministic_split = false;
  /// Message delivery delay is uniform in [0, delivery_scale * s_i] ticks.
  double delivery_scale = 2.0;
  /// A node step lasts 1 + uniform{0..step_jitter} ticks.
  std::uint32_t step_jitter = 0;
  Backend backend = Backend::Event;
  bool record_trace = true;
  bool record_iterates = false;
  bool record_gradients = false;
  bool check_ledger = false;
  /// Initial model; empty means all zeros.
  std::vector<double> w0;
};

/// One gradient computation, stored at index t = rho(c, i, h).
struct GradientRecord {
  std::int64_t t = -1;
  int c = 0;
  std::int64_t i = 0;
  std::int64_t h = 0;
  double step = 0;
  std::int64_t t_glob = 0;
  std::int64_t t_delay = 0;
  std::int64_t k = 0;
  std::size_t sample = 0;
  /// The local model holds broadcast `base` plus the node's own rounds
  /// [own_from, i) and the first h gradients of round i.
  std::int64_t base = 0;
  std::int64_t own_from = 0;
};

/// Content of a broadcast model: all rounds < k plus the listed (round, node) pairs.
struct BroadcastRecord {
  std::int64_t k = 0;
  std::vector<std::pair<std::int64_t, int>> extra;

  bool contains(std::int64_t round, int node) const;
};

struct RoundRecord {
  std::int64_t round = 0;
  int node = 0;
  std::int64_t size = 0;
  std::uint64_t send_seq = 0;
  std::uint64_t recv_seq = 0;
};

struct RunTrace {
  int n = 1;
  std::int64_t first_round = 0;
  AssignmentTable table;
  /// positions[i][c-1]: global indices t of node c's entries in round i.
  std::vector<std::vector<std::vector<std::int64_t>>> positions;
  std::vector<GradientRecord> records;
  /// Index 0 describes the initial model.
  std::vector<BroadcastRecord> broadcasts;
  std::vector<RoundRecord> rounds;
  std::vector<double> round_steps;
  std::vector<std::vector<double>> iterates;
  std::vector<std::vector<double>> gradients;
  /// Per completed round: the vector subtracted from the model for that round.
  std::vector<std::vector<double>> applied;
};

/// Model w_t after every round below `round` has been applied (t = sum of their sizes).
struct Checkpoint {
  std::int64_t round = 0;
  std::int64_t t = 0;
  std::vector<double> w;
};

struct RunResult {
  RunTrace trace;
  std::vector<Checkpoint> checkpoints;
  std::vector<double> final_w;
  std::vector<double> server_w;
  std::int64_t K = 0;
  std::int64_t T = 0;
  std::vector<std::int64_t> rounds_per_node;
  std::int64_t messages = 0;
  std::int64_t gate_violations = 0;
  std::int64_t ledger_violations = 0;
  double wall_time = 0;
};

/// Runs the server and n compute nodes until `budget` gradients have been computed.
RunResult run(const EngineConfig& config);

/// Builds the truncated assignment table a run with this config uses.
AssignmentTable run_table(const EngineConfig& config);

std::int64_t rho(const AssignmentTable& table, int c, std::int64_t i, std::int64_t h);

struct Label {
  int c = 0;
  std::int64_t i = 0;
  std::int64_t h = 0;
  bool operator==(const Label&) const = default;
};
Label rho_inverse(const AssignmentTable& table, std::int64_t t);

/// Step size used at iteration t by serial SGD.
using StepFn = std::function<double(std::int64_t)>;

struct SerialResult {
  std::vector<double> w;
  std::vector<std::vector<double>> history;
  std::vector<std::size_t> samples;
};

/// Plain SGD over an explicit sample order.
SerialResult sgd_steps(const Problem& p, const DataSet& ds, std::span<const std::size_t> order,
                       const StepFn& step, std::vector<double> w0 = {}, bool keep_history = false);

/// Serial SGD drawing K samples uniformly from `local` (all of ds when empty) with the
/// sampling stream of node 1. keep_history stores w_0 .. w_K.
SerialResult serial_sgd(const Problem& p, const DataSet& ds, std::span<const std::size_t> local,
                        const StepFn& step, std::int64_t K, std::uint64_t seed,
                        std::vector<double> w0 = {}, bool keep_history = false);
SerialResult serial_sgd(const Problem& p, const DataSet& ds, const StepSchedule& steps,
                        std::int64_t K, std::uint64_t seed, bool keep_history = false);

struct AuditReport {
  bool ok = true;
  std::optional<std::int64_t> first_violation;
  std::int64_t checked = 0;
  std::string detail;
};

/// Checks that each local model read at t contains every update t' < t - ceil(tau(t)).
AuditReport audit_consistency(const RunTrace& trace, const DelayFn& tau);
AuditReport audit_consistency(const RunTrace& trace, const DelayFunction& tau);

/// Checks t_delay <= tau(t_glob) for every gradient record.
AuditReport audit_gate_invariant(const RunTrace& trace, const DelayFn& tau);

/// Recomputes each round's applied update from the recorded gradients.
AuditReport audit_round_sums(const RunTrace& trace, double rel_tol = 1e-9);

struct GateEquivalenceReport {
  bool ok = true;
  AuditReport lag;
  AuditReport tau;
};

/// Runs the config under both gates and checks the tau-gate invariant in both traces.
GateEquivalenceReport audit_gate_equivalence(const EngineConfig& config);

struct OptimumInfo {
  std::vector<double> w_star;
  double F_star = 0;
  double N = 0;
  double grad_norm = 0;
  bool exact = false;
  bool degenerate = false;
};

/// Minimizer estimate. QuadraticMean is solved exactly; logistic problems run serial
/// SGD for `budget` steps and then polish with Newton iterations.
OptimumInfo find_optimum(const Problem& p, const DataSet& ds, std::int64_t budget,
                         std::uint64_t seed);

}  // namespace asgd
