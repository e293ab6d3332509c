#include "asgd/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <sstream>

#include "asgd/engine_internal.hpp"

namespace asgd {

std::string to_string(Gate gate) { return gate == Gate::Lag ? "lag" : "tau"; }
std::string to_string(Backend backend) { return backend == Backend::Event ? "event" : "threaded"; }

bool BroadcastRecord::contains(std::int64_t round, int node) const {
  return round < k || std::binary_search(extra.begin(), extra.end(), std::make_pair(round, node));
}

AssignmentTable run_table(const EngineConfig& cfg) {
  if (cfg.budget < 1) throw EngineError(EngineError::Kind::Invalid, "budget must be >= 1");
  const int n = cfg.partition.nodes();
  if (n < 1) throw EngineError(EngineError::Kind::Invalid, "partition has no nodes");
  const std::int64_t last = rounds_for_budget(cfg.samples, cfg.budget);
  auto table = build_assignment(cfg.samples, cfg.partition.p, n, last + 1, cfg.seed,
                                cfg.deterministic_split);
  truncate_to_budget(table, cfg.budget);
  return table;
}

std::int64_t rho(const AssignmentTable& table, int c, std::int64_t i, std::int64_t h) {
  if (i < 0 || i >= table.rounds() || h < 0 || c < 1 || c > table.n)
    throw std::out_of_range("rho: label out of range");
  const auto& row = table.rows[static_cast<std::size_t>(i)];
  std::int64_t seen = 0;
  for (std::size_t t = 0; t < row.size(); ++t) {
    if (row[t] != c) continue;
    if (seen == h) return table.offset(i) + static_cast<std::int64_t>(t);
    ++seen;
  }
  throw std::out_of_range("rho: h exceeds s_{i,c}");
}

Label rho_inverse(const AssignmentTable& table, std::int64_t t) {
  if (t < 0 || t >= table.total()) throw std::out_of_range("rho_inverse: t out of range");
  std::int64_t lo = 0, hi = table.rounds() - 1;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (table.offset(mid + 1) > t)
      hi = mid;
    else
      lo = mid + 1;
  }
  const auto& row = table.rows[static_cast<std::size_t>(lo)];
  const auto pos = static_cast<std::size_t>(t - table.offset(lo));
  const int c = row[pos];
  const auto h = std::count(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(pos), c);
  return {c, lo, h};
}

namespace detail {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw EngineError(EngineError::Kind::NonFinite, std::string("non-finite value in ") + what);
}

RunContext::RunContext(const EngineConfig& c) : cfg(c) {
  if (!cfg.data || cfg.data->empty())
    throw EngineError(EngineError::Kind::Invalid, "no training data");
  if (cfg.d < 0) throw EngineError(EngineError::Kind::Invalid, "d must be >= 0");
  if (cfg.gate == Gate::Tau && !cfg.delay)
    throw EngineError(EngineError::Kind::Invalid, "the tau gate needs a delay function");
  if (cfg.step_mode == StepMode::PerIteration &&
      cfg.steps.kind() == StepSchedule::Kind::StronglyConvexRound)
    throw EngineError(EngineError::Kind::Invalid,
                      "strongly convex round steps cannot be used per iteration");
  if (cfg.data->dim() != cfg.problem.feature_dim())
    throw EngineError(EngineError::Kind::Invalid, "data dimension does not match the problem");
  n = cfg.partition.nodes();
  dim = cfg.problem.dim();
  table = run_table(cfg);
  rounds = table.rounds();
  first_round = cfg.samples.first_round();
  K = table.total();
  positions.resize(static_cast<std::size_t>(rounds));
  round_step.resize(static_cast<std::size_t>(rounds));
  for (std::int64_t i = 0; i < rounds; ++i) {
    auto& pos = positions[static_cast<std::size_t>(i)];
    pos.resize(static_cast<std::size_t>(n));
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::int64_t base = table.offset(i);
    for (std::size_t t = 0; t < row.size(); ++t)
      pos[static_cast<std::size_t>(row[t] - 1)].push_back(base + static_cast<std::int64_t>(t));
    round_step[static_cast<std::size_t>(i)] = cfg.steps.at(static_cast<double>(base));
  }
  w0 = cfg.w0.empty() ? std::vector<double>(dim, 0.0) : cfg.w0;
  if (w0.size() != dim) throw EngineError(EngineError::Kind::Invalid, "w0 has the wrong dimension");
  if (cfg.delay) {
    const DelayFunction df = *cfg.delay;
    tau = [df](double x) { return df(x); };
  }
}

double RunContext::iteration_step(std::int64_t i, std::int64_t h) const {
  return cfg.steps.at(static_cast<double>(table.offset(i) + static_cast<std::int64_t>(n) * h));
}

double RunContext::tau_at(std::int64_t x) const {
  return tau(static_cast<double>(std::max<std::int64_t>(x, 0)));
}

// ---------------------------------------------------------------------------

NodeLogic::NodeLogic(const RunContext& ctx, int c, TraceSink sink)
    : ctx_(ctx),
      c_(c),
      sink_(sink),
      rng_(ctx.cfg.seed, Stream::NodeSampling, static_cast<std::uint32_t>(c)),
      local_(ctx.cfg.partition.locals[static_cast<std::size_t>(c - 1)]),
      i_(ctx.first_round),
      k_(ctx.first_round),
      own_from_(ctx.first_round),
      w_(ctx.w0),
      U_(ctx.dim, 0.0),
      g_(ctx.dim, 0.0) {
  auto initial = std::make_shared<BroadcastRecord>();
  initial->k = ctx.first_round;
  base_content_ = std::move(initial);
}

bool NodeLogic::gate_open() const {
  if (ctx_.cfg.gate == Gate::Lag) return i_ <= k_ + ctx_.cfg.d;
  const std::int64_t rest = ctx_.size(i_, c_) - h_;
  const std::int64_t end = ctx_.table.offset(i_ + 1);
  const std::int64_t t_glob = end - rest - 1;
  const std::int64_t t_delay = end - ctx_.table.offset(k_) - rest;
  return t_delay <= 0 || ctx_.tau_at(t_glob) >= static_cast<double>(t_delay);
}

NodeLogic::Action NodeLogic::step(std::uint64_t seq, Update* out) {
  if (done()) return Action::Done;
  const std::int64_t s_ic = ctx_.size(i_, c_);
  if (h_ < s_ic) {
    if (!gate_open()) return Action::Blocked;
    const std::int64_t t =
        ctx_.positions[static_cast<std::size_t>(i_)][static_cast<std::size_t>(c_ - 1)][static_cast<std::size_t>(h_)];
    const std::int64_t end = ctx_.table.offset(i_ + 1);
    const std::int64_t t_glob = end - (s_ic - h_) - 1;
    const std::int64_t t_delay = end - ctx_.table.offset(k_) - (s_ic - h_);
    if (ctx_.tau && t_delay > 0 && ctx_.tau_at(t_glob) < static_cast<double>(t_delay))
      ++gate_violations_;
    const std::size_t idx = draw_sample_index(local_, rng_);
    const double eta = ctx_.cfg.step_mode == StepMode::PerRound
                           ? ctx_.round_step[static_cast<std::size_t>(i_)]
                           : ctx_.iteration_step(i_, h_);
    if (sink_.records) {
      auto& r = sink_.trace->records[static_cast<std::size_t>(t)];
      r.t = t;
      r.c = c_;
      r.i = i_;
      r.h = h_;
      r.step = eta;
      r.t_glob = t_glob;
      r.t_delay = t_delay;
      r.k = k_;
      r.sample = idx;
      r.base = base_;
      r.own_from = own_from_;
    }
    if (sink_.iterates) sink_.trace->iterates[static_cast<std::size_t>(t)] = w_;
    grad_into(ctx_.cfg.problem, w_, (*ctx_.cfg.data)[idx], g_);
    if (sink_.gradients) sink_.trace->gradients[static_cast<std::size_t>(t)] = g_;
    if (ctx_.cfg.step_mode == StepMode::PerRound) {
      for (std::size_t j = 0; j < w_.size(); ++j) {
        U_[j] += g_[j];
        w_[j] -= eta * g_[j];
      }
    } else {
      for (std::size_t j = 0; j < w_.size(); ++j) {
        const double sg = eta * g_[j];
        U_[j] += sg;
        w_[j] -= sg;
      }
    }
    check_finite(w_, "a local model");
    ++h_;
    return Action::Gradient;
  }
  out->i = i_;
  out->c = c_;
  {
    std::vector<double> applied = U_;
    if (ctx_.cfg.step_mode == StepMode::PerRound) {
      const double eta = ctx_.round_step[static_cast<std::size_t>(i_)];
      for (auto& x : applied) x *= eta;
    }
    unconfirmed_.emplace_back(i_, std::move(applied));
  }
  out->U = std::exchange(U_, std::vector<double>(ctx_.dim, 0.0));
  out->send_seq = seq;
  ++sent_;
  ++i_;
  h_ = 0;
  return Action::Send;
}

bool NodeLogic::same_content(const BroadcastRecord& next) const {
  const BroadcastRecord& cur = *base_content_;
  std::int64_t hi = i_;
  for (const auto& e : cur.extra) hi = std::max(hi, e.first);
  for (const auto& e : next.extra) hi = std::max(hi, e.first);
  for (std::int64_t r = std::min(cur.k, next.k); r <= hi; ++r) {
    for (int c = 1; c <= ctx_.n; ++c) {
      const bool mine = c == c_ && r >= own_from_ && r < i_;
      if ((cur.contains(r, c) || mine) != (next.contains(r, c) || mine)) return false;
    }
  }
  return true;
}

bool NodeLogic::receive(const Broadcast& b) {
  if (done() || b.k <= k_) return false;
  k_ = b.k;
  const BroadcastRecord& next = *b.content;
  std::erase_if(unconfirmed_, [&](const auto& e) { return next.contains(e.first, c_); });
  if (!same_content(next)) {
    const auto& v = *b.v;
    const double eta =
        ctx_.cfg.step_mode == StepMode::PerRound ? ctx_.round_step[static_cast<std::size_t>(i_)] : 1.0;
    for (std::size_t j = 0; j < w_.size(); ++j) {
      double x = v[j];
      for (const auto& e : unconfirmed_) x -= e.second[j];
      w_[j] = x - eta * U_[j];
    }
  }
  base_ = b.id;
  base_content_ = b.content;
  return true;
}

// ---------------------------------------------------------------------------

ServerLogic::ServerLogic(const RunContext& ctx, TraceSink sink)
    : ctx_(ctx),
      sink_(sink),
      v_(ctx.w0),
      w_true_(ctx.w0),
      k_(ctx.first_round),
      pending_(static_cast<std::size_t>(ctx.rounds)),
      received_(static_cast<std::size_t>(ctx.rounds), 0) {
  checkpoints_.push_back({k_, ctx.table.offset(k_), w_true_});
}

double ServerLogic::scale(std::int64_t i) const {
  return ctx_.cfg.step_mode == StepMode::PerRound ? ctx_.round_step[static_cast<std::size_t>(i)] : 1.0;
}

void ServerLogic::complete_round(std::int64_t r) {
  auto& updates = pending_[static_cast<std::size_t>(r)];
  const double sc = scale(r);
  std::vector<double> applied(ctx_.dim, 0.0);
  for (const auto& U : updates)
    for (std::size_t j = 0; j < applied.size(); ++j) applied[j] += sc * U[j];
  for (std::size_t j = 0; j < applied.size(); ++j) w_true_[j] -= applied[j];
  checkpoints_.push_back({r + 1, ctx_.table.offset(r + 1), w_true_});
  if (sink_.gradients) sink_.trace->applied[static_cast<std::size_t>(r)] = std::move(applied);
  updates.clear();
  updates.shrink_to_fit();
  ++completed_;
}

std::optional<Broadcast> ServerLogic::apply(Update&& u, std::uint64_t recv_seq) {
  ++messages_;
  const double sc = scale(u.i);
  for (std::size_t j = 0; j < v_.size(); ++j) v_[j] -= sc * u.U[j];
  check_finite(v_, "the server model");
  if (sink_.records)
    sink_.trace->rounds.push_back({u.i, u.c, ctx_.size(u.i, u.c), u.send_seq, recv_seq});
  H_.insert({u.i, u.c});
  auto& slot = pending_[static_cast<std::size_t>(u.i)];
  if (slot.empty()) slot.resize(static_cast<std::size_t>(ctx_.n));
  slot[static_cast<std::size_t>(u.c - 1)] = std::move(u.U);
  ++received_[static_cast<std::size_t>(u.i)];

  bool advanced = false;
  while (k_ < ctx_.rounds && received_[static_cast<std::size_t>(k_)] == ctx_.n) {
    complete_round(k_);
    for (int c = 1; c <= ctx_.n; ++c) H_.erase({k_, c});
    ++k_;
    advanced = true;
  }

  if (ctx_.cfg.check_ledger) {
    std::vector<double> expected = w_true_;
    for (const auto& [i, c] : H_) {
      const auto& U = pending_[static_cast<std::size_t>(i)][static_cast<std::size_t>(c - 1)];
      const double s = scale(i);
      for (std::size_t j = 0; j < expected.size(); ++j) expected[j] -= s * U[j];
    }
    double diff = 0, norm = 1.0;
    for (std::size_t j = 0; j < expected.size(); ++j) {
      diff = std::max(diff, std::abs(expected[j] - v_[j]));
      norm = std::max(norm, std::abs(v_[j]));
    }
    if (diff > 1e-9 * norm) ++ledger_violations_;
  }

  if (!advanced) return std::nullopt;
  auto content = std::make_shared<BroadcastRecord>();
  content->k = k_;
  content->extra.assign(H_.begin(), H_.end());
  if (sink_.records) sink_.trace->broadcasts.push_back(*content);
  return Broadcast{std::make_shared<const std::vector<double>>(v_), k_, next_id_++, std::move(content)};
}

// ---------------------------------------------------------------------------

namespace {

void prepare_trace(const RunContext& ctx, RunResult& res) {
  const auto& cfg = ctx.cfg;
  auto& tr = res.trace;
  tr.n = ctx.n;
  tr.first_round = ctx.first_round;
  tr.table = ctx.table;
  tr.positions = ctx.positions;
  tr.round_steps = ctx.round_step;
  tr.broadcasts.push_back(BroadcastRecord{ctx.first_round, {}});
  if (cfg.record_trace) tr.records.resize(static_cast<std::size_t>(ctx.K));
  if (cfg.record_iterates) tr.iterates.resize(static_cast<std::size_t>(ctx.K));
  if (cfg.record_gradients) {
    tr.gradients.resize(static_cast<std::size_t>(ctx.K));
    tr.applied.resize(static_cast<std::size_t>(ctx.rounds));
  }
}

struct Event {
  enum Type { NodeStep, UpdateArrive, BroadcastArrive };
  std::uint64_t time = 0;
  std::uint64_t tie = 0;
  std::uint64_t seq = 0;
  Type type = NodeStep;
  int node = 0;
  std::shared_ptr<Update> update;
  Broadcast broadcast;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.tie != b.tie) return a.tie > b.tie;
    return a.seq > b.seq;
  }
};

RunResult run_event(const EngineConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunContext ctx(cfg);
  RunResult res;
  prepare_trace(ctx, res);
  TraceSink sink{&res.trace, cfg.record_trace, cfg.record_iterates, cfg.record_gradients};

  std::vector<NodeLogic> nodes;
  nodes.reserve(static_cast<std::size_t>(ctx.n));
  for (int c = 1; c <= ctx.n; ++c) nodes.emplace_back(ctx, c, sink);
  ServerLogic server(ctx, sink);
  std::vector<bool> waiting(static_cast<std::size_t>(ctx.n), false);

  CounterRng tie(cfg.seed, Stream::Interleaving);
  CounterRng delivery(cfg.seed, Stream::Delivery);
  std::priority_queue<Event, std::vector<Event>, Later> queue;
  std::uint64_t seq = 0;
  auto push = [&](Event e) {
    e.tie = tie.next_u64();
    e.seq = seq++;
    queue.push(std::move(e));
  };
  auto delay_for = [&](std::int64_t round) {
    const auto s = round >= 0 && round < ctx.rounds ? ctx.table.row_size(round) : 0;
    const auto span = static_cast<std::uint64_t>(std::floor(cfg.delivery_scale * static_cast<double>(s)));
    return delivery.next_below(span + 1);
  };
  auto duration = [&]() -> std::uint64_t {
    return 1 + (cfg.step_jitter ? tie.next_below(std::uint64_t{cfg.step_jitter} + 1) : 0);
  };

  for (int c = 1; c <= ctx.n; ++c) push({0, 0, 0, Event::NodeStep, c, nullptr, {}});
  std::uint64_t recv_seq = 0;
  while (!queue.empty()) {
    Event ev = queue.top();
    queue.pop();
    switch (ev.type) {
      case Event::NodeStep: {
        auto& node = nodes[static_cast<std::size_t>(ev.node - 1)];
        auto update = std::make_shared<Update>();
        switch (node.step(ev.seq, update.get())) {
          case NodeLogic::Action::Gradient:
            push({ev.time + duration(), 0, 0, Event::NodeStep, ev.node, nullptr, {}});
            break;
          case NodeLogic::Action::Send: {
            const auto round = update->i;
            push({ev.time + delay_for(round), 0, 0, Event::UpdateArrive, ev.node, std::move(update), {}});
            if (!node.done()) push({ev.time + duration(), 0, 0, Event::NodeStep, ev.node, nullptr, {}});
            break;
          }
          case NodeLogic::Action::Blocked:
            waiting[static_cast<std::size_t>(ev.node - 1)] = true;
            break;
          case NodeLogic::Action::Done:
            break;
        }
        break;
      }
      case Event::UpdateArrive: {
        auto b = server.apply(std::move(*ev.update), recv_seq++);
        if (b) {
          for (int c = 1; c <= ctx.n; ++c)
            push({ev.time + delay_for(b->k - 1), 0, 0, Event::BroadcastArrive, c, nullptr, *b});
        }
        break;
      }
      case Event::BroadcastArrive: {
        auto& node = nodes[static_cast<std::size_t>(ev.node - 1)];
        if (node.receive(ev.broadcast) && waiting[static_cast<std::size_t>(ev.node - 1)]) {
          waiting[static_cast<std::size_t>(ev.node - 1)] = false;
          push({ev.time, 0, 0, Event::NodeStep, ev.node, nullptr, {}});
        }
        break;
      }
    }
  }

  bool all_done = server.finished();
  for (const auto& node : nodes) all_done = all_done && node.done();
  if (!all_done) {
    std::ostringstream msg;
    msg << "deadlock: server completed " << server.k() << " of " << ctx.rounds << " rounds;";
    for (int c = 1; c <= ctx.n; ++c)
      msg << " node " << c << " at round " << nodes[static_cast<std::size_t>(c - 1)].round()
          << (waiting[static_cast<std::size_t>(c - 1)] ? " (gated)" : "");
    throw EngineError(EngineError::Kind::Deadlock, msg.str());
  }

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

}  // namespace

void prepare_trace_for(const RunContext& ctx, RunResult& res) { prepare_trace(ctx, res); }

}  // namespace detail

RunResult run(const EngineConfig& config) {
  if (config.backend == Backend::Threaded) return detail::run_threaded(config);
  return detail::run_event(config);
}

}  // namespace asgd
