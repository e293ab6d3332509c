#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

#include "asgd/engine_internal.hpp"

namespace asgd::detail {

namespace {

template <typename T>
class Channel {
 public:
  void push(T value) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
  }

  std::deque<T> drain() {
    std::lock_guard lock(mu_);
    return std::exchange(items_, {});
  }

  /// Waits until an item arrives or `stop` is set; returns false on stop.
  bool wait(const std::atomic<bool>& stop) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, std::chrono::milliseconds(50), [&] { return !items_.empty() || stop.load(); });
    return !items_.empty();
  }

  bool empty() const {
    std::lock_guard lock(mu_);
    return items_.empty();
  }

  void wake() { cv_.notify_all(); }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
};

}  // namespace

RunResult run_threaded(const EngineConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunContext ctx(cfg);
  RunResult res;
  prepare_trace_for(ctx, res);
  TraceSink sink{&res.trace, cfg.record_trace, cfg.record_iterates, cfg.record_gradients};

  std::vector<NodeLogic> nodes;
  nodes.reserve(static_cast<std::size_t>(ctx.n));
  for (int c = 1; c <= ctx.n; ++c) nodes.emplace_back(ctx, c, sink);
  ServerLogic server(ctx, sink);

  Channel<Update> updates;
  std::vector<Channel<Broadcast>> inboxes(static_cast<std::size_t>(ctx.n));
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> progress{0};
  std::atomic<std::uint64_t> send_seq{0};
  std::atomic<int> finished_nodes{0};
  std::atomic<bool> server_done{false};
  std::vector<std::atomic<bool>> blocked(static_cast<std::size_t>(ctx.n));
  std::vector<std::atomic<bool>> exited(static_cast<std::size_t>(ctx.n));
  std::mutex error_mu;
  std::exception_ptr error;

  auto fail = [&](std::exception_ptr e) {
    {
      std::lock_guard lock(error_mu);
      if (!error) error = e;
    }
    stop = true;
    updates.wake();
    for (auto& inbox : inboxes) inbox.wake();
  };

  auto node_main = [&](int c) {
    auto& node = nodes[static_cast<std::size_t>(c - 1)];
    auto& inbox = inboxes[static_cast<std::size_t>(c - 1)];
    try {
      while (!stop) {
        for (auto& b : inbox.drain()) node.receive(b);
        Update u;
        const auto action = node.step(send_seq++, &u);
        if (action != NodeLogic::Action::Blocked) ++progress;
        if (action == NodeLogic::Action::Send) {
          updates.push(std::move(u));
          if (node.done()) break;
        } else if (action == NodeLogic::Action::Blocked) {
          blocked[static_cast<std::size_t>(c - 1)] = true;
          inbox.wait(stop);
          blocked[static_cast<std::size_t>(c - 1)] = false;
        } else if (action == NodeLogic::Action::Done) {
          break;
        }
      }
    } catch (...) {
      fail(std::current_exception());
    }
    exited[static_cast<std::size_t>(c - 1)] = true;
    ++finished_nodes;
  };

  auto server_main = [&] {
    std::uint64_t recv_seq = 0;
    try {
      while (!stop && !server.finished()) {
        if (!updates.wait(stop)) continue;
        for (auto& u : updates.drain()) {
          auto b = server.apply(std::move(u), recv_seq++);
          ++progress;
          if (b)
            for (auto& inbox : inboxes) inbox.push(*b);
        }
      }
    } catch (...) {
      fail(std::current_exception());
    }
    server_done = true;
  };

  std::vector<std::thread> threads;
  threads.emplace_back(server_main);
  for (int c = 1; c <= ctx.n; ++c) threads.emplace_back(node_main, c);

  std::uint64_t last_progress = ~std::uint64_t{0};
  int idle_polls = 0;
  while (!(server_done && finished_nodes == ctx.n)) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    if (stop) break;
    const auto now = progress.load();
    bool quiet = updates.empty();
    for (int c = 0; c < ctx.n && quiet; ++c)
      quiet = inboxes[static_cast<std::size_t>(c)].empty() &&
              (blocked[static_cast<std::size_t>(c)] || exited[static_cast<std::size_t>(c)]);
    idle_polls = (quiet && now == last_progress) ? idle_polls + 1 : 0;
    last_progress = now;
    if (idle_polls >= 10) {
      fail(std::make_exception_ptr(EngineError(
          EngineError::Kind::Deadlock,
          "deadlock: all nodes gated with no message in flight")));
      break;
    }
  }
  stop = true;
  updates.wake();
  for (auto& inbox : inboxes) inbox.wake();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);

  res.checkpoints = server.take_checkpoints();
  res.final_w = server.true_model();
  res.server_w = server.model();
  res.K = ctx.K;
  res.T = server.completed_rounds();
  res.messages = server.messages();
  res.ledger_violations = server.ledger_violations();
  for (const auto& node : nodes) {
    res.rounds_per_node.push_back(node.rounds_sent());
    res.gate_violations += node.gate_violations();
  }
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace asgd::detail
