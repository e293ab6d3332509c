#include "asgd/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace asgd {

namespace {

const std::set<std::string> kTopLevelKeys = {
    "problem", "data", "synthetic", "nodes", "p", "partition", "seed", "sample_schedule",
    "step_schedule", "step_mode", "delay", "gate", "d", "budget", "checkpoint_interval",
    "backend", "allow_incompatible", "deterministic_split", "delivery", "record_trace",
    "optimum_budget"};

template <typename T>
T field(const Json& j, const std::string& key, T fallback, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(path + key, std::string("wrong type (") + e.what() + ")");
  }
}

template <typename T>
T required(const Json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + key, "missing required field");
  return field<T>(j, key, T{}, path);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

ProblemKind parse_problem_kind(const std::string& s) {
  if (s == "logistic_ridge") return ProblemKind::LogisticRidge;
  if (s == "logistic_plain") return ProblemKind::LogisticPlain;
  if (s == "quadratic_mean") return ProblemKind::QuadraticMean;
  throw ConfigError("problem.kind", "unknown problem '" + s + "'");
}

Json default_steps(ProblemKind kind) {
  if (kind == ProblemKind::LogisticPlain)
    return {{"kind", "inverse_sqrt_t"}, {"eta0", 0.003}, {"beta", 0.01}};
  return {{"kind", "inverse_t"}, {"eta0", 0.01}, {"beta", 0.001}};
}

struct Schedules {
  SampleSchedule samples = SampleSchedule::constant(1);
  StepSchedule steps = StepSchedule::constant(0.01);
  std::optional<DelayFunction> delay;
};

Schedules build_schedules(const Json& sample, const Json& step, const Json& delay, std::int64_t d,
                          int n, const Smoothness& constants, ProblemKind problem) {
  const std::string sp = "sample_schedule.";
  Schedules out;
  std::optional<DelayFunction> natural;
  bool strongly = false;
  const std::string kind = field<std::string>(sample, "kind", "power_law", sp);
  const bool per_node = field<bool>(sample, "per_node", false, sp);
  const double scale = per_node ? static_cast<double>(n) : 1.0;
  try {
    if (kind == "constant") {
      out.samples = SampleSchedule::constant(
          static_cast<std::int64_t>(scale) * required<std::int64_t>(sample, "s", sp));
    } else if (kind == "power_law") {
      out.samples = SampleSchedule::power_law(scale * field<double>(sample, "a", 50.0, sp),
                                              scale * field<double>(sample, "b", 0.0, sp),
                                              field<double>(sample, "c", 1.0, sp));
    } else if (kind == "lemma_power") {
      const double g = field<double>(sample, "g", 2.0, sp);
      const auto m = field<std::int64_t>(sample, "m", 0, sp);
      out.samples = SampleSchedule::lemma_power(g, m, d);
      natural = lemma_power_delay(g, m, d);
    } else if (kind == "lemma_log") {
      const auto m = field<std::int64_t>(sample, "m", 7747, sp);
      out.samples = SampleSchedule::lemma_log(m, d);
      natural = DelayFunction{2.0, std::pow(static_cast<double>(m + 1), 2) / 4.0,
                              static_cast<double>(d + 2), GammaKind::FourLog};
    } else if (kind == "explicit") {
      auto sizes = required<std::vector<std::int64_t>>(sample, "sizes", sp);
      for (auto& s : sizes) s *= static_cast<std::int64_t>(scale);
      out.samples = SampleSchedule::explicit_sizes(std::move(sizes));
    } else if (kind == "strongly_convex") {
      const double mu = field<double>(sample, "mu", constants.mu, sp);
      const double L = field<double>(sample, "L", constants.L, sp);
      if (!(mu > 0))
        throw ConfigError(sp + "mu", "strongly convex schedules need mu > 0 (use a ridge or quadratic problem)");
      auto sc = make_strongly_convex_schedules(mu, L, d, field<std::int64_t>(sample, "m", 7747, sp));
      out.samples = sc.samples;
      out.steps = sc.steps;
      natural = sc.delay;
      strongly = true;
    } else {
      throw ConfigError(sp + "kind", "unknown sample schedule '" + kind + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("sample_schedule", e.what());
  }

  const std::string tp = "step_schedule.";
  const Json steps_json = step.is_null() ? (strongly ? Json{{"kind", "strongly_convex"}} : default_steps(problem)) : step;
  const std::string step_kind = field<std::string>(steps_json, "kind", "inverse_t", tp);
  try {
    if (step_kind == "constant") {
      out.steps = StepSchedule::constant(required<double>(steps_json, "eta", tp));
    } else if (step_kind == "inverse_t") {
      out.steps = StepSchedule::inverse_t(field<double>(steps_json, "eta0", 0.01, tp),
                                          field<double>(steps_json, "beta", 0.001, tp));
    } else if (step_kind == "inverse_sqrt_t") {
      out.steps = StepSchedule::inverse_sqrt_t(field<double>(steps_json, "eta0", 0.01, tp),
                                               field<double>(steps_json, "beta", 0.01, tp));
    } else if (step_kind == "strongly_convex") {
      if (!strongly) throw ConfigError(tp + "kind", "strongly_convex steps need strongly_convex sample sizes");
    } else {
      throw ConfigError(tp + "kind", "unknown step schedule '" + step_kind + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("step_schedule", e.what());
  }

  if (delay.is_null() || (delay.is_string() && delay.get<std::string>() == "auto")) {
    out.delay = natural;
  } else if (delay.is_string() && delay.get<std::string>() == "none") {
    out.delay.reset();
  } else if (delay.is_object()) {
    DelayFunction df;
    df.g = field<double>(delay, "g", 2.0, "delay.");
    df.m0 = field<double>(delay, "M0", 0.0, "delay.");
    df.m1 = field<double>(delay, "M1", 0.0, "delay.");
    const auto gamma = field<std::string>(delay, "gamma", "one", "delay.");
    if (gamma == "one")
      df.gamma = GammaKind::ConstantOne;
    else if (gamma == "four_log")
      df.gamma = GammaKind::FourLog;
    else
      throw ConfigError("delay.gamma", "expected 'one' or 'four_log'");
    if (!(df.g > 1)) throw ConfigError("delay.g", "must be > 1");
    out.delay = df;
  } else {
    throw ConfigError("delay", "expected 'auto', 'none' or an object");
  }
  return out;
}

double normal(CounterRng& rng) {
  double u1 = rng.next_double();
  while (u1 <= 0.0) u1 = rng.next_double();
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kTopLevelKeys.count(key)) throw ConfigError(key, "unknown configuration key");
  RunConfig cfg;
  cfg.raw = j;
  if (j.contains("problem")) {
    const auto& pj = j.at("problem");
    if (pj.is_string()) {
      cfg.problem = parse_problem_kind(pj.get<std::string>());
    } else {
      cfg.problem = parse_problem_kind(field<std::string>(pj, "kind", "logistic_ridge", "problem."));
      if (pj.contains("lambda")) cfg.lambda = field<double>(pj, "lambda", 0.0, "problem.");
    }
  }
  if (j.contains("data")) {
    const auto& dj = j.at("data");
    if (dj.is_string()) {
      cfg.data_path = dj.get<std::string>();
    } else {
      cfg.data_path = required<std::string>(dj, "path", "data.");
      cfg.test_path = field<std::string>(dj, "test_path", "", "data.");
    }
  }
  if (j.contains("synthetic")) {
    const auto& sj = j.at("synthetic");
    SyntheticSpec s;
    s.samples = field<std::size_t>(sj, "samples", s.samples, "synthetic.");
    s.dim = field<std::size_t>(sj, "dim", s.dim, "synthetic.");
    s.mean = field<double>(sj, "mean", s.mean, "synthetic.");
    s.stddev = field<double>(sj, "stddev", s.stddev, "synthetic.");
    s.seed = field<std::uint64_t>(sj, "seed", s.seed, "synthetic.");
    if (s.samples == 0 || s.dim == 0) throw ConfigError("synthetic", "samples and dim must be >= 1");
    cfg.synthetic = s;
  }
  if (cfg.data_path.empty() && !cfg.synthetic)
    throw ConfigError("data", "either data or synthetic must be given");
  if (!cfg.data_path.empty() && cfg.synthetic)
    throw ConfigError("data", "data and synthetic are mutually exclusive");

  cfg.nodes = field<int>(j, "nodes", 5, "");
  if (cfg.nodes < 1) throw ConfigError("nodes", "must be >= 1");
  cfg.p = field<std::vector<double>>(j, "p", {}, "");
  if (!cfg.p.empty()) {
    if (static_cast<int>(cfg.p.size()) != cfg.nodes) throw ConfigError("p", "length must equal nodes");
    double total = 0;
    for (double v : cfg.p) {
      if (!(v > 0)) throw ConfigError("p", "entries must be > 0");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("p", "entries must sum to 1");
  }
  const auto part = field<std::string>(j, "partition", "unbiased", "");
  if (part == "unbiased")
    cfg.partition = PartitionMode::Unbiased;
  else if (part == "biased_by_label")
    cfg.partition = PartitionMode::BiasedByLabel;
  else
    throw ConfigError("partition", "expected 'unbiased' or 'biased_by_label'");
  cfg.seed = field<std::uint64_t>(j, "seed", 0, "");
  cfg.sample_schedule = j.value("sample_schedule", Json{{"kind", "power_law"}, {"a", 50}, {"b", 0}, {"c", 1}});
  if (!cfg.sample_schedule.is_object()) throw ConfigError("sample_schedule", "expected an object");
  cfg.step_schedule = j.value("step_schedule", Json());
  const auto mode = field<std::string>(j, "step_mode", "per_round", "");
  if (mode == "per_round")
    cfg.step_mode = StepMode::PerRound;
  else if (mode == "per_iteration")
    cfg.step_mode = StepMode::PerIteration;
  else
    throw ConfigError("step_mode", "expected 'per_round' or 'per_iteration'");
  cfg.delay = j.value("delay", Json());
  const auto gate = field<std::string>(j, "gate", "lag", "");
  if (gate == "lag")
    cfg.gate = Gate::Lag;
  else if (gate == "tau")
    cfg.gate = Gate::Tau;
  else
    throw ConfigError("gate", "expected 'lag' or 'tau'");
  cfg.d = field<std::int64_t>(j, "d", 1, "");
  if (cfg.d < 0) throw ConfigError("d", "must be >= 0");
  cfg.budget = field<std::int64_t>(j, "budget", 20000, "");
  if (cfg.budget < 1) throw ConfigError("budget", "must be >= 1");
  cfg.checkpoint_interval = field<std::int64_t>(j, "checkpoint_interval", 1, "");
  if (cfg.checkpoint_interval < 1) throw ConfigError("checkpoint_interval", "must be >= 1");
  const auto backend = field<std::string>(j, "backend", "event", "");
  if (backend == "event")
    cfg.backend = Backend::Event;
  else if (backend == "threaded")
    cfg.backend = Backend::Threaded;
  else
    throw ConfigError("backend", "expected 'event' or 'threaded'");
  cfg.allow_incompatible = field<bool>(j, "allow_incompatible", false, "");
  cfg.deterministic_split = field<bool>(j, "deterministic_split", false, "");
  if (j.contains("delivery")) {
    cfg.delivery_scale = field<double>(j.at("delivery"), "scale", 2.0, "delivery.");
    cfg.step_jitter = field<std::uint32_t>(j.at("delivery"), "jitter", 0, "delivery.");
    if (!(cfg.delivery_scale >= 0)) throw ConfigError("delivery.scale", "must be >= 0");
  }
  cfg.record_trace = field<bool>(j, "record_trace", true, "");
  if (j.contains("optimum_budget")) cfg.optimum_budget = field<std::int64_t>(j, "optimum_budget", 0, "");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

DataSet make_synthetic(const SyntheticSpec& spec, bool logistic_labels) {
  CounterRng rng(spec.seed, Stream::Synthetic);
  DataSet ds("synthetic", spec.dim);
  std::vector<double> x(spec.dim);
  const double scale = 2.0 / std::sqrt(static_cast<double>(spec.dim));
  for (std::size_t r = 0; r < spec.samples; ++r) {
    double score = 0;
    for (auto& v : x) {
      v = spec.mean + spec.stddev * normal(rng);
      score += v * scale;
    }
    int label = 0;
    if (logistic_labels) label = rng.next_double() < 1.0 / (1.0 + std::exp(-score)) ? 1 : 0;
    ds.add(x, label);
  }
  return ds;
}

Prepared prepare(const RunConfig& cfg) {
  Prepared prep;
  const bool logistic = cfg.problem != ProblemKind::QuadraticMean;
  try {
    if (cfg.synthetic) {
      prep.train = std::make_shared<DataSet>(make_synthetic(*cfg.synthetic, logistic));
    } else {
      prep.train = std::make_shared<DataSet>(load_libsvm(cfg.data_path));
      if (!cfg.test_path.empty()) prep.test = std::make_shared<DataSet>(load_libsvm(cfg.test_path));
    }
  } catch (const DataError& e) {
    throw ConfigError("data", e.what());
  }
  if (prep.test) {
    const auto dim = std::max(prep.train->dim(), prep.test->dim());
    prep.train->resize_dim(dim);
    prep.test->resize_dim(dim);
  }
  const auto M = static_cast<double>(prep.train->size());
  Problem problem = Problem::quadratic_mean(prep.train->dim());
  if (cfg.problem == ProblemKind::LogisticRidge) {
    const double lambda = cfg.lambda.value_or(1.0 / M);
    if (!(lambda > 0)) throw ConfigError("problem.lambda", "must be > 0");
    problem = Problem::logistic_ridge(prep.train->dim(), lambda);
  } else if (cfg.problem == ProblemKind::LogisticPlain) {
    problem = Problem::logistic_plain(prep.train->dim());
  }
  prep.constants = smoothness_constants(problem, *prep.train);

  Partition part;
  try {
    part = partition(*prep.train, cfg.nodes, cfg.partition, cfg.p, cfg.seed);
  } catch (const std::exception& e) {
    throw ConfigError("partition", e.what());
  }

  auto sched = build_schedules(cfg.sample_schedule, cfg.step_schedule, cfg.delay, cfg.d, cfg.nodes,
                               prep.constants, cfg.problem);
  if (cfg.step_mode == StepMode::PerIteration &&
      sched.steps.kind() == StepSchedule::Kind::StronglyConvexRound)
    throw ConfigError("step_mode", "strongly convex round steps are defined per round only");
  const std::int64_t first = sched.samples.first_round();
  if (cfg.budget < sched.samples.size(first))
    throw ConfigError("budget", "K = " + std::to_string(cfg.budget) +
                                    " is smaller than the first round size " +
                                    std::to_string(sched.samples.size(first)));
  prep.last_round = rounds_for_budget(sched.samples, cfg.budget);
  if (cfg.gate == Gate::Tau && !sched.delay)
    throw ConfigError("gate", "the tau gate needs a delay function");
  if (sched.delay) {
    CompatibilityReport rep;
    try {
      rep = verify_delay_compatibility(sched.samples, *sched.delay, cfg.d,
                                       std::max(prep.last_round, cfg.d));
    } catch (const std::exception& e) {
      throw ConfigError("delay", e.what());
    }
    prep.compatibility = rep;
    if (!rep.ok && !cfg.allow_incompatible)
      throw ConfigError("sample_schedule",
                        "sample sizes violate the delay property at round " +
                            std::to_string(*rep.first_violation) + " (set allow_incompatible to run anyway)");
  }

  auto& e = prep.engine;
  e.problem = problem;
  e.data = prep.train;
  e.partition = std::move(part);
  e.samples = sched.samples;
  e.steps = sched.steps;
  e.step_mode = cfg.step_mode;
  e.delay = sched.delay;
  e.gate = cfg.gate;
  e.d = cfg.d;
  e.budget = cfg.budget;
  e.seed = cfg.seed;
  e.deterministic_split = cfg.deterministic_split;
  e.delivery_scale = cfg.delivery_scale;
  e.step_jitter = cfg.step_jitter;
  e.backend = cfg.backend;
  e.record_trace = cfg.record_trace;
  return prep;
}

OptimumInfo optimum_for(const RunConfig& cfg, const Prepared& prep) {
  const auto budget = cfg.optimum_budget.value_or(10 * static_cast<std::int64_t>(prep.train->size()));
  return find_optimum(prep.engine.problem, *prep.train, budget, cfg.seed);
}

Json compute_metrics(const Prepared& prep, const RunResult& res, const OptimumInfo* opt,
                     std::int64_t checkpoint_interval) {
  const auto& problem = prep.engine.problem;
  const auto& train = *prep.train;
  Json m;
  m["K"] = res.K;
  m["T"] = res.T;
  m["last_round"] = prep.last_round;
  m["problem"] = {{"kind", to_string(problem.kind())},
                  {"lambda", problem.lambda()},
                  {"mu", prep.constants.mu},
                  {"L", prep.constants.L},
                  {"dim", problem.dim()},
                  {"samples", train.size()}};
  m["nodes"] = prep.engine.partition.nodes();
  m["seed"] = prep.engine.seed;
  m["gate"] = to_string(prep.engine.gate);
  m["d"] = prep.engine.d;
  m["sample_schedule"] = to_string(prep.engine.samples.kind());
  m["step_schedule"] = to_string(prep.engine.steps.kind());
  m["step_mode"] = prep.engine.step_mode == StepMode::PerRound ? "per_round" : "per_iteration";
  if (prep.compatibility) {
    m["compatible"] = prep.compatibility->ok;
    if (prep.compatibility->first_violation) m["first_incompatible_round"] = *prep.compatibility->first_violation;
  }
  Json parts = Json::array();
  for (int c = 0; c < prep.engine.partition.nodes(); ++c) {
    const auto& local = prep.engine.partition.locals[static_cast<std::size_t>(c)];
    std::map<std::string, std::size_t> hist;
    for (auto idx : local) hist[std::to_string(train.labels()[idx])]++;
    parts.push_back({{"node", c + 1},
                     {"size", local.size()},
                     {"p", prep.engine.partition.p[static_cast<std::size_t>(c)]},
                     {"labels", hist}});
  }
  m["partition"] = parts;

  std::vector<double> yf;
  std::vector<std::int64_t> ts;
  Json cps = Json::array();
  for (std::size_t q = 0; q < res.checkpoints.size(); ++q) {
    const auto& cp = res.checkpoints[q];
    const double f = objective(problem, cp.w, train);
    ts.push_back(cp.t);
    yf.push_back(opt ? f - opt->F_star : f);
    const bool keep = q % static_cast<std::size_t>(checkpoint_interval) == 0 || q + 1 == res.checkpoints.size();
    if (!keep) continue;
    Json row = {{"round", cp.round}, {"t", cp.t}, {"objective", f}};
    if (opt) {
      double yw = 0;
      for (std::size_t j = 0; j < cp.w.size(); ++j) yw += (cp.w[j] - opt->w_star[j]) * (cp.w[j] - opt->w_star[j]);
      row["Y_w"] = yw;
      row["Y_F"] = f - opt->F_star;
    }
    cps.push_back(std::move(row));
  }
  if (opt) {
    std::size_t out = 0;
    for (std::size_t q = 0; q < res.checkpoints.size(); ++q) {
      const bool keep = q % static_cast<std::size_t>(checkpoint_interval) == 0 || q + 1 == res.checkpoints.size();
      if (!keep) continue;
      const auto t = ts[q];
      double acc = 0;
      std::size_t cnt = 0;
      for (std::size_t r = q + 1; r < ts.size() && ts[r] <= 2 * t; ++r) {
        acc += yf[r];
        ++cnt;
      }
      cps[out++]["Y_A"] = (t > 0 && cnt > 0) ? Json(acc / static_cast<double>(cnt)) : Json(nullptr);
    }
  }
  m["checkpoints"] = cps;

  Json fin;
  const double f_final = objective(problem, res.final_w, train);
  fin["objective"] = f_final;
  if (opt) {
    double yw = 0;
    for (std::size_t j = 0; j < res.final_w.size(); ++j)
      yw += (res.final_w[j] - opt->w_star[j]) * (res.final_w[j] - opt->w_star[j]);
    fin["Y_w"] = yw;
    fin["Y_F"] = f_final - opt->F_star;
  }
  if (problem.is_logistic()) {
    fin["train_accuracy"] = accuracy(problem, res.final_w, train);
    if (prep.test) fin["accuracy"] = accuracy(problem, res.final_w, *prep.test);
  }
  m["final"] = fin;
  if (opt) {
    m["optimum"] = {{"F_star", opt->F_star},
                    {"N", opt->N},
                    {"grad_norm", opt->grad_norm},
                    {"exact", opt->exact},
                    {"degenerate", opt->degenerate}};
  }
  m["rounds_per_node"] = res.rounds_per_node;
  m["messages"] = res.messages;
  m["gate_violations"] = res.gate_violations;
  m["ledger_violations"] = res.ledger_violations;
  m["backend"] = to_string(prep.engine.backend);
  if (prep.engine.backend == Backend::Threaded) m["wall_time"] = res.wall_time;
  return m;
}

AuditSummary audit_run(const Prepared& prep, const RunResult& res) {
  AuditSummary out;
  const auto& tr = res.trace;
  Json rep;

  bool rho_ok = true;
  std::string rho_detail;
  std::vector<char> seen(static_cast<std::size_t>(tr.table.total()), 0);
  for (std::int64_t i = 0; i < tr.table.rounds() && rho_ok; ++i) {
    for (int c = 1; c <= tr.n && rho_ok; ++c) {
      const auto& pos = tr.positions[static_cast<std::size_t>(i)][static_cast<std::size_t>(c - 1)];
      for (std::size_t h = 0; h < pos.size(); ++h) {
        const auto t = pos[h];
        const Label want{c, i, static_cast<std::int64_t>(h)};
        if (seen[static_cast<std::size_t>(t)]++ || !(rho_inverse(tr.table, t) == want)) {
          rho_ok = false;
          rho_detail = "label mismatch at t = " + std::to_string(t);
          break;
        }
      }
    }
  }
  if (rho_ok && std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    rho_ok = false;
    rho_detail = "some iteration has no label";
  }
  rep["rho"] = {{"ok", rho_ok}, {"detail", rho_detail}};
  out.ok = rho_ok;

  auto to_json = [](const AuditReport& r) {
    Json j = {{"ok", r.ok}, {"checked", r.checked}, {"detail", r.detail}};
    if (r.first_violation) j["first_violation"] = *r.first_violation;
    return j;
  };
  if (prep.engine.delay && !tr.records.empty()) {
    const DelayFunction df = *prep.engine.delay;
    const DelayFn tau = [df](double x) { return df(x); };
    const auto cons = audit_consistency(tr, tau);
    const auto gate = audit_gate_invariant(tr, tau);
    rep["consistency"] = to_json(cons);
    rep["gate_invariant"] = to_json(gate);
    out.ok = out.ok && cons.ok && gate.ok;
  } else {
    rep["consistency"] = {{"ok", nullptr}, {"detail", "skipped: no delay function or no trace"}};
    rep["gate_invariant"] = rep["consistency"];
  }
  rep["ledger"] = {{"ok", res.ledger_violations == 0}, {"violations", res.ledger_violations}};
  out.ok = out.ok && res.ledger_violations == 0;
  rep["ok"] = out.ok;
  out.report = rep;
  return out;
}

RunOutput execute(const RunConfig& cfg, bool audit) {
  RunOutput out;
  out.prepared = prepare(cfg);
  if (audit) {
    out.prepared.engine.check_ledger = true;
    out.prepared.engine.record_trace = true;
  }
  out.result = run(out.prepared.engine);
  const bool want_optimum = !(cfg.optimum_budget && *cfg.optimum_budget == 0 && cfg.problem != ProblemKind::QuadraticMean);
  if (want_optimum) out.optimum = optimum_for(cfg, out.prepared);
  out.metrics = compute_metrics(out.prepared, out.result, out.optimum ? &*out.optimum : nullptr,
                                cfg.checkpoint_interval);
  if (audit) {
    out.audit = audit_run(out.prepared, out.result);
    out.metrics["audit"] = out.audit->report;
  }
  return out;
}

void write_trace_jsonl(const RunTrace& trace, std::ostream& out) {
  for (const auto& r : trace.records) {
    Json j = {{"t", r.t},           {"c", r.c},         {"i", r.i},
              {"h", r.h},           {"step", r.step},   {"t_glob", r.t_glob},
              {"t_delay", r.t_delay}, {"k", r.k},       {"sample", r.sample},
              {"base_k", trace.broadcasts[static_cast<std::size_t>(r.base)].k},
              {"base", r.base},     {"own_from", r.own_from}};
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

std::string schedule_csv(const Json& params) {
  if (!params.is_object()) throw ConfigError("params", "expected a JSON object");
  const auto d = field<std::int64_t>(params, "d", 1, "");
  if (d < 0) throw ConfigError("d", "must be >= 0");
  const auto rows = field<std::int64_t>(params, "rows", 10, "");
  if (rows < 1) throw ConfigError("rows", "must be >= 1");
  const int n = field<int>(params, "nodes", 1, "");
  const Json sample = params.value("sample_schedule", Json{{"kind", "power_law"}, {"a", 50}, {"b", 0}, {"c", 1}});
  const Smoothness constants{field<double>(sample, "mu", 0.0, "sample_schedule."),
                             field<double>(sample, "L", 0.0, "sample_schedule.")};
  auto sched = build_schedules(sample, params.value("step_schedule", Json()), params.value("delay", Json()),
                               d, n, constants, ProblemKind::LogisticRidge);
  std::ostringstream out;
  out << "i,s_i,cumulative,eta_bar,tau,compatible\n";
  const std::int64_t first = sched.samples.first_round();
  std::vector<std::int64_t> sizes;
  std::int64_t before = 0;
  for (std::int64_t i = 0; i < first; ++i) {
    sizes.push_back(sched.samples.size(i));
    before += sizes.back();
  }
  for (std::int64_t i = first; i < first + rows; ++i) {
    const std::int64_t s = sched.samples.size(i);
    sizes.push_back(s);
    const double eta = sched.steps.at(static_cast<double>(before));
    const std::int64_t cum = before + s;
    out << i << ',' << s << ',' << cum << ',' << fmt(eta) << ',';
    if (sched.delay) {
      const double tau = (*sched.delay)(static_cast<double>(cum));
      out << fmt(tau) << ',';
      if (i < d) {
        out << "n/a";
      } else {
        std::int64_t window = 0;
        for (std::int64_t j = i - d; j <= i; ++j) window += sizes[static_cast<std::size_t>(j)];
        out << (tau >= 1.0 + static_cast<double>(window) ? "true" : "false");
      }
    } else {
      out << ',';
    }
    out << '\n';
    before = cum;
  }
  return out.str();
}

// ---------------------------------------------------------------------------

std::vector<double> default_grid() { return {1, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001, 0.0003, 0.0001}; }

namespace {

struct GridPoint {
  double eta = 0;
  double objective = std::numeric_limits<double>::infinity();
  std::string accuracy;
  std::string rounds;
};

Json with_eta(const Json& raw, ProblemKind problem, double eta) {
  Json j = raw;
  Json steps = j.value("step_schedule", Json());
  if (steps.is_null()) steps = default_steps(problem);
  if (steps.value("kind", std::string("inverse_t")) == "constant")
    steps["eta"] = eta;
  else
    steps["eta0"] = eta;
  j["step_schedule"] = steps;
  return j;
}

std::vector<GridPoint> sweep(const RunConfig& cfg, const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("grid", "empty grid");
  std::vector<GridPoint> out;
  for (double eta : grid) {
    Json j = with_eta(cfg.raw, cfg.problem, eta);
    j["record_trace"] = false;
    j["optimum_budget"] = 0;
    const auto run_cfg = parse_config(j);
    GridPoint g;
    g.eta = eta;
    try {
      const auto res = execute(run_cfg, false);
      g.objective = res.metrics["final"]["objective"].get<double>();
      if (res.metrics["final"].contains("accuracy")) g.accuracy = fmt(res.metrics["final"]["accuracy"].get<double>());
      g.rounds = std::to_string(res.metrics["T"].get<std::int64_t>());
    } catch (const EngineError& e) {
      if (e.kind() != EngineError::Kind::NonFinite) throw;
    }
    if (!std::isfinite(g.objective)) g.objective = std::numeric_limits<double>::infinity();
    out.push_back(std::move(g));
  }
  return out;
}

double selected_eta(const std::vector<GridPoint>& points) {
  double best = std::numeric_limits<double>::infinity();
  double eta = points.front().eta;
  for (const auto& g : points)
    if (g.objective < best) {
      best = g.objective;
      eta = g.eta;
    }
  return eta;
}

}  // namespace

std::string grid_csv(const RunConfig& cfg, const std::vector<double>& grid) {
  const auto points = sweep(cfg, grid);
  std::ostringstream out;
  out << "eta0,objective,accuracy,T\n";
  for (const auto& g : points) out << fmt(g.eta) << ',' << fmt(g.objective) << ',' << g.accuracy << ',' << g.rounds << '\n';
  out << "selected," << fmt(selected_eta(points)) << ",,\n";
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

struct Setting {
  std::string name;
  Json config;
  bool tune = false;
};

Json a9a_base(const ExperimentOptions& o, const std::string& problem) {
  Json j = {{"problem", {{"kind", problem}}},
            {"data", {{"path", o.data_path}}},
            {"nodes", 5},
            {"seed", o.seed},
            {"budget", 20000},
            {"record_trace", false},
            {"optimum_budget", 0}};
  if (!o.test_path.empty()) j["data"]["test_path"] = o.test_path;
  return j;
}

Json with(Json j, const Json& patch) {
  j.merge_patch(patch);
  return j;
}

std::string describe_samples(const Json& s) {
  std::ostringstream o;
  o << s.value("kind", std::string("power_law"));
  for (const auto& [k, v] : s.items())
    if (k != "kind") o << ' ' << k << '=' << (v.is_array() ? "[" + std::to_string(v.size()) + " values]" : v.dump());
  return o.str();
}

std::string describe_steps(const Json& s) {
  if (s.is_null()) return "default";
  std::ostringstream o;
  o << s.value("kind", std::string("inverse_t"));
  for (const auto& [k, v] : s.items())
    if (k != "kind") o << ' ' << k << '=' << v.dump();
  return o.str();
}

std::vector<Setting> suite_settings(const std::string& suite, const ExperimentOptions& o) {
  std::vector<Setting> out;
  const Json ridge = a9a_base(o, "logistic_ridge");
  const Json plain = a9a_base(o, "logistic_plain");
  if (suite == "const-vs-diminishing") {
    for (const auto* prob : {"logistic_ridge", "logistic_plain"}) {
      const Json base = a9a_base(o, prob);
      for (int s : {50, 100, 200, 500, 700, 1000})
        out.push_back({"constant eta=0.0025 s=" + std::to_string(s) + "/node",
                       with(base, {{"sample_schedule", {{"kind", "constant"}, {"s", s}, {"per_node", true}}},
                                   {"step_schedule", {{"kind", "constant"}, {"eta", 0.0025}}},
                                   {"allow_incompatible", true}})});
      const bool strongly = std::string(prob) == "logistic_ridge";
      const Json steps = strongly ? Json{{"kind", "inverse_t"}, {"eta0", 0.01}, {"beta", 0.001}}
                                  : Json{{"kind", "inverse_sqrt_t"}, {"eta0", 0.01}, {"beta", 0.01}};
      for (int a : {10, 20})
        for (const auto* mode : {"per_round", "per_iteration"})
          out.push_back({std::string(mode == std::string("per_round") ? "diminishing2" : "diminishing1") +
                             " linear a=" + std::to_string(a) + "/node",
                         with(base, {{"sample_schedule", {{"kind", "power_law"}, {"a", a}, {"b", 0}, {"c", 1}, {"per_node", true}}},
                                     {"step_schedule", steps},
                                     {"step_mode", mode}}),
                         true});
    }
  } else if (suite == "sampling-methods") {
    std::vector<std::int64_t> ilogi;
    for (int i = 2; i < 400; ++i)
      ilogi.push_back(static_cast<std::int64_t>(std::ceil(50.0 * i / std::log(static_cast<double>(i)))));
    for (const auto* prob : {"logistic_ridge", "logistic_plain"}) {
      const Json base = a9a_base(o, prob);
      for (double c : {0.0, 0.5, 1.0})
        out.push_back({"O(i^c) a=50 c=" + fmt(c),
                       with(base, {{"sample_schedule", {{"kind", "power_law"}, {"a", 50}, {"b", 0}, {"c", c}}}})});
      out.push_back({"O(i/ln i) a=50", with(base, {{"sample_schedule", {{"kind", "explicit"}, {"sizes", ilogi}}}})});
    }
    out.push_back({"lemma_log m=7747 (strongly convex recipe sizes)",
                   with(ridge, {{"sample_schedule", {{"kind", "lemma_log"}, {"m", 7747}}}})});
  } else if (suite == "biased-vs-unbiased") {
    for (const auto* prob : {"logistic_ridge", "logistic_plain"})
      for (const auto* mode : {"unbiased", "biased_by_label"})
        out.push_back({std::string(mode),
                       with(a9a_base(o, prob), {{"nodes", 2}, {"budget", 10000}, {"partition", mode}})});
  } else if (suite == "scaling-nodes") {
    for (int n : {1, 2, 5})
      out.push_back({"quadratic n=" + std::to_string(n),
                     {{"problem", "quadratic_mean"},
                      {"synthetic", {{"samples", 1000}, {"dim", 10}, {"seed", o.seed}}},
                      {"nodes", n},
                      {"seed", o.seed},
                      {"budget", 20000},
                      {"record_trace", false},
                      {"sample_schedule", {{"kind", "strongly_convex"}, {"m", 7747}}}}});
    for (int n : {1, 2, 5, 10}) out.push_back({"a9a n=" + std::to_string(n), with(ridge, {{"nodes", n}})});
  } else if (suite == "budget-sweep") {
    for (int k : {5000, 10000, 20000, 50000})
      out.push_back({"K=" + std::to_string(k), with(ridge, {{"budget", k}})});
    for (int k : {5000, 10000, 20000, 50000})
      out.push_back({"K=" + std::to_string(k), with(plain, {{"budget", k}})});
  } else {
    throw ConfigError("suite", "unknown suite '" + suite + "'");
  }
  return out;
}

}  // namespace

std::vector<std::string> experiment_suites() {
  return {"const-vs-diminishing", "sampling-methods", "biased-vs-unbiased", "scaling-nodes", "budget-sweep"};
}

std::string experiment_csv(const std::string& suite, const ExperimentOptions& options) {
  const auto settings = suite_settings(suite, options);
  std::ostringstream out;
  out << "suite,setting,problem,n,partition,samples,steps,step_mode,accuracy,T,K,objective,Y_w\n";
  for (const auto& s : settings) {
    auto cfg = parse_config(s.config);
    if (s.tune) cfg = parse_config(with_eta(cfg.raw, cfg.problem, selected_eta(sweep(cfg, default_grid()))));
    const auto res = execute(cfg, false);
    const auto& m = res.metrics;
    const auto& fin = m["final"];
    out << suite << ",\"" << s.name << "\"," << m["problem"]["kind"].get<std::string>() << ','
        << m["nodes"].get<int>() << ',' << s.config.value("partition", std::string("unbiased")) << ",\""
        << describe_samples(cfg.sample_schedule) << "\",\"" << describe_steps(cfg.step_schedule) << "\","
        << m["step_mode"].get<std::string>() << ','
        << (fin.contains("accuracy") ? fmt(fin["accuracy"].get<double>()) : "") << ','
        << m["T"].get<std::int64_t>() << ',' << m["K"].get<std::int64_t>() << ','
        << fmt(fin["objective"].get<double>()) << ','
        << (fin.contains("Y_w") ? fmt(fin["Y_w"].get<double>()) : "") << '\n';
  }
  return out.str();
}

}  // namespace asgd
