#pragma once

#include <memory>
#include <set>
#include <utility>
#include <vector>

#include "asgd/engine.hpp"
#include "asgd/rng.hpp"

namespace asgd::detail {

struct Broadcast {
  std::shared_ptr<const std::vector<double>> v;
  std::int64_t k = 0;
  std::int64_t id = 0;
  std::shared_ptr<const BroadcastRecord> content;
};

struct Update {
  std::int64_t i = 0;
  int c = 0;
  std::vector<double> U;
  std::uint64_t send_seq = 0;
};

/// Immutable per-run data shared by the server and all nodes.
struct RunContext {
  explicit RunContext(const EngineConfig& cfg);

  const EngineConfig& cfg;
  int n = 1;
  std::int64_t rounds = 0;
  std::int64_t first_round = 0;
  std::int64_t K = 0;
  std::size_t dim = 0;
  AssignmentTable table;
  std::vector<std::vector<std::vector<std::int64_t>>> positions;
  std::vector<double> round_step;
  std::vector<double> w0;
  DelayFn tau;

  std::int64_t size(std::int64_t i, int c) const {
    return static_cast<std::int64_t>(positions[static_cast<std::size_t>(i)][static_cast<std::size_t>(c - 1)].size());
  }
  double iteration_step(std::int64_t i, std::int64_t h) const;
  double tau_at(std::int64_t x) const;
};

/// Where nodes and the server write trace data; indices are disjoint per writer.
struct TraceSink {
  RunTrace* trace = nullptr;
  bool records = false;
  bool iterates = false;
  bool gradients = false;
};

class NodeLogic {
 public:
  enum class Action { Gradient, Send, Blocked, Done };

  NodeLogic(const RunContext& ctx, int c, TraceSink sink);

  /// Performs one gradient or one send; Blocked when the gate is closed.
  Action step(std::uint64_t seq, Update* out);
  /// Broadcast receipt; returns true when the broadcast was accepted.
  bool receive(const Broadcast& b);

  bool done() const { return i_ >= ctx_.rounds; }
  bool gate_open() const;
  std::int64_t round() const { return i_; }
  std::int64_t gate_violations() const { return gate_violations_; }
  std::int64_t rounds_sent() const { return sent_; }

 private:
  bool same_content(const BroadcastRecord& next) const;

  const RunContext& ctx_;
  int c_;
  TraceSink sink_;
  CounterRng rng_;
  const std::vector<std::size_t>& local_;
  std::int64_t i_;
  std::int64_t h_ = 0;
  std::int64_t k_;
  std::int64_t base_ = 0;
  std::shared_ptr<const BroadcastRecord> base_content_;
  std::int64_t own_from_;
  std::vector<std::pair<std::int64_t, std::vector<double>>> unconfirmed_;
  std::vector<double> w_;
  std::vector<double> U_;
  std::vector<double> g_;
  std::int64_t gate_violations_ = 0;
  std::int64_t sent_ = 0;
};

class ServerLogic {
 public:
  ServerLogic(const RunContext& ctx, TraceSink sink);

  /// Dequeues one update; returns a broadcast when at least one round completed.
  std::optional<Broadcast> apply(Update&& u, std::uint64_t recv_seq);

  bool finished() const { return k_ >= ctx_.rounds; }
  std::int64_t k() const { return k_; }
  const std::vector<double>& model() const { return v_; }
  const std::vector<double>& true_model() const { return w_true_; }
  std::vector<Checkpoint> take_checkpoints() { return std::move(checkpoints_); }
  std::int64_t ledger_violations() const { return ledger_violations_; }
  std::int64_t completed_rounds() const { return completed_; }
  std::int64_t messages() const { return messages_; }

 private:
  void complete_round(std::int64_t r);
  double scale(std::int64_t i) const;

  const RunContext& ctx_;
  TraceSink sink_;
  std::vector<double> v_;
  std::vector<double> w_true_;
  std::int64_t k_;
  std::set<std::pair<std::int64_t, int>> H_;
  std::vector<std::vector<std::vector<double>>> pending_;
  std::vector<int> received_;
  std::vector<Checkpoint> checkpoints_;
  std::int64_t ledger_violations_ = 0;
  std::int64_t completed_ = 0;
  std::int64_t messages_ = 0;
  std::int64_t next_id_ = 1;
};

void check_finite(std::span<const double> v, const char* what);

void prepare_trace_for(const RunContext& ctx, RunResult& res);
RunResult run_threaded(const EngineConfig& cfg);

}  // namespace asgd::detail
