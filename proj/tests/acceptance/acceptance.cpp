// Acceptance checks; prints one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "asgd/harness.hpp"
#include "mixture.hpp"

using namespace asgd;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

std::string fixed(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::shared_ptr<const DataSet> synthetic(std::size_t M, std::size_t dim, std::uint64_t seed, bool logistic) {
  return std::make_shared<DataSet>(make_synthetic({M, dim, 1.0, 1.0, seed}, logistic));
}

Outcome schedule_fidelity() {
  const auto sc = make_strongly_convex_schedules(1, 1, 1, 7747);
  const auto s0 = sc.samples.size(0);
  return {s0 == 16, "s_0 = " + std::to_string(s0)};
}

Outcome delay_property_grid() {
  int checked = 0, failed = 0;
  for (double g : {2.0, 3.0})
    for (std::int64_t d : {0, 1, 2})
      for (std::int64_t m : {0, 10}) {
        ++checked;
        if (!verify_delay_compatibility(SampleSchedule::lemma_power(g, m, d), lemma_power_delay(g, m, d), d, 10000).ok)
          ++failed;
      }
  ++checked;
  const auto sc = make_strongly_convex_schedules(1, 1, 1, 7747);
  if (!verify_delay_compatibility(sc.samples, sc.delay, 1, 10000).ok) ++failed;
  return {failed == 0, std::to_string(checked - failed) + "/" + std::to_string(checked) + " schedules hold for i <= 10^4"};
}

Outcome serial_equivalence() {
  CounterRng r(2024, Stream::Interleaving);
  int exact = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const bool logistic = trial % 2 == 1;
    EngineConfig cfg;
    cfg.data = synthetic(200, 5, 500 + static_cast<std::uint64_t>(trial), logistic);
    cfg.problem = logistic ? Problem::logistic_ridge(5, 0.005) : Problem::quadratic_mean(5);
    cfg.seed = r.next_u64();
    cfg.partition = partition(*cfg.data, 1, PartitionMode::Unbiased, {}, cfg.seed);
    const SampleSchedule choices[] = {SampleSchedule::constant(9), SampleSchedule::power_law(4, 0, 1),
                                      SampleSchedule::lemma_power(2, 4, 1), SampleSchedule::lemma_log(50, 1)};
    cfg.samples = choices[trial % 4];
    cfg.steps = trial % 3 == 0 ? StepSchedule::inverse_sqrt_t(0.05, 0.01) : StepSchedule::inverse_t(0.05, 0.002);
    cfg.step_mode = trial % 2 == 0 ? StepMode::PerRound : StepMode::PerIteration;
    cfg.gate = Gate::Lag;
    cfg.d = static_cast<std::int64_t>(r.next_below(3));
    cfg.delivery_scale = 0.5 + 3 * r.next_double();
    cfg.step_jitter = static_cast<std::uint32_t>(r.next_below(4));
    cfg.budget = 400 + static_cast<std::int64_t>(r.next_below(600));
    cfg.record_iterates = true;
    const auto res = run(cfg);
    const RunTrace& tr = res.trace;
    const StepFn steps = cfg.step_mode == StepMode::PerIteration
                             ? StepFn([&](std::int64_t t) { return cfg.steps.at(static_cast<double>(t)); })
                             : StepFn([&](std::int64_t t) { return tr.round_steps[static_cast<std::size_t>(rho_inverse(tr.table, t).i)]; });
    const auto serial = serial_sgd(cfg.problem, *cfg.data, cfg.partition.locals[0], steps, cfg.budget, cfg.seed, {}, true);
    bool same = true;
    for (std::int64_t t = 0; t < cfg.budget && same; ++t)
      same = tr.records[static_cast<std::size_t>(t)].sample == serial.samples[static_cast<std::size_t>(t)] &&
             tr.iterates[static_cast<std::size_t>(t)] == serial.history[static_cast<std::size_t>(t)];
    exact += same;
  }
  return {exact == 10, std::to_string(exact) + "/10 configurations bit-identical"};
}

Outcome delay_invariant_audit() {
  int runs = 0, passed = 0;
  std::int64_t violations = 0;
  for (int n : {2, 5})
    for (Gate gate : {Gate::Lag, Gate::Tau})
      for (std::uint64_t seed = 0; seed < 25; ++seed) {
        EngineConfig cfg;
        cfg.data = synthetic(300, 4, seed, false);
        cfg.problem = Problem::quadratic_mean(4);
        cfg.partition = partition(*cfg.data, n, PartitionMode::Unbiased, {}, seed);
        const std::int64_t d = static_cast<std::int64_t>(seed % 3);
        cfg.samples = SampleSchedule::lemma_power(2, 4, d);
        cfg.delay = lemma_power_delay(2, 4, d);
        cfg.d = d;
        cfg.gate = gate;
        cfg.steps = StepSchedule::inverse_t(0.05, 0.01);
        cfg.step_jitter = static_cast<std::uint32_t>(seed % 4);
        cfg.budget = 3000;
        cfg.seed = seed;
        const auto res = run(cfg);
        const DelayFunction df = *cfg.delay;
        const bool ok = audit_consistency(res.trace, df).ok &&
                        audit_gate_invariant(res.trace, [df](double x) { return df(x); }).ok && res.gate_violations == 0;
        violations += res.gate_violations;
        ++runs;
        passed += ok;
      }
  return {passed == runs, std::to_string(passed) + "/" + std::to_string(runs) + " runs clean, " +
                              std::to_string(violations) + " gate violations"};
}

Outcome rho_bijectivity() {
  CounterRng r(77, Stream::Interleaving);
  int good = 0;
  std::int64_t labels = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(r.next_below(5));
    const auto rounds = 1 + static_cast<std::int64_t>(r.next_below(20));
    std::vector<double> p(static_cast<std::size_t>(n));
    for (auto& x : p) x = 0.2 + r.next_double();
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p) x /= total;
    const auto t = build_assignment(SampleSchedule::power_law(3, 1, 1), p, n, rounds, r.next_u64());
    std::vector<int> hit(static_cast<std::size_t>(t.total()), 0);
    bool ok = true;
    for (std::int64_t i = 0; i < t.rounds(); ++i)
      for (int c = 1; c <= n; ++c)
        for (std::int64_t h = 0; h < per_node_sizes(t, i, c); ++h) {
          const auto x = rho(t, c, i, h);
          ++labels;
          if (x < 0 || x >= t.total()) {
            ok = false;
            continue;
          }
          hit[static_cast<std::size_t>(x)]++;
          ok = ok && rho_inverse(t, x) == Label{c, i, h};
        }
    ok = ok && std::all_of(hit.begin(), hit.end(), [](int v) { return v == 1; });
    good += ok;
  }
  return {good == 50, std::to_string(good) + "/50 tables bijective over " + std::to_string(labels) + " labels"};
}

Outcome convergence_rate() {
  const std::int64_t K = 100000;
  std::vector<double> scaled, bounds;
  std::vector<std::int64_t> ts;
  std::vector<std::vector<double>> yw;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Json j = {{"problem", "quadratic_mean"},
                    {"synthetic", {{"samples", 1000}, {"dim", 10}, {"seed", seed}}},
                    {"nodes", 5},
                    {"seed", seed},
                    {"budget", K},
                    {"record_trace", false},
                    {"sample_schedule", {{"kind", "strongly_convex"}, {"m", 7747}}}};
    const auto out = execute(parse_config(j), false);
    const auto& m = out.metrics;
    scaled.push_back(static_cast<double>(K) * m["final"]["Y_w"].get<double>());
    const double mu = m["problem"]["mu"].get<double>();
    bounds.push_back(4 * 36.0 * 36.0 * out.optimum->N / (mu * mu));
    std::vector<double> row;
    std::vector<std::int64_t> t_row;
    for (const auto& cp : m["checkpoints"]) {
      const auto t = cp["t"].get<std::int64_t>();
      if (t < K / 10) continue;
      t_row.push_back(t);
      row.push_back(cp["Y_w"].get<double>());
    }
    if (ts.empty()) ts = t_row;
    if (t_row != ts) return {false, "checkpoint grids differ across seeds"};
    yw.push_back(row);
  }
  const double med = median(scaled);
  const double bound = median(bounds);

  std::vector<double> product, lx, ly;
  for (std::size_t q = 0; q < ts.size(); ++q) {
    std::vector<double> at;
    for (const auto& row : yw) at.push_back(row[q]);
    const double y = mean(at);
    product.push_back(y * static_cast<double>(ts[q]));
    lx.push_back(std::log(static_cast<double>(ts[q])));
    ly.push_back(std::log(y));
  }
  const double cap = 2 * median(product);
  const bool bounded = std::all_of(product.begin(), product.end(), [&](double v) { return v <= cap; });
  const double mx = mean(lx), my = mean(ly);
  double sxy = 0, sxx = 0;
  for (std::size_t q = 0; q < lx.size(); ++q) {
    sxy += (lx[q] - mx) * (ly[q] - my);
    sxx += (lx[q] - mx) * (lx[q] - mx);
  }
  const double slope = sxy / sxx;
  const bool ok = med <= bound && bounded && slope >= -1.3 && slope <= -0.7;
  return {ok, "median K*Y_w = " + fixed(med) + " <= " + fixed(bound, 1) + ", t*Y_w bounded: " +
                  (bounded ? "yes" : "no") + ", slope " + fixed(slope, 3) + " over " + std::to_string(ts.size()) +
                  " checkpoints"};
}

Outcome communication_sublinearity() {
  const std::int64_t K = 20000;
  const auto linear = SampleSchedule::power_law(50, 0, 1);
  const auto T = communication_rounds(linear, K);
  const auto T_const = communication_rounds(SampleSchedule::constant(100), K);
  Json j = {{"problem", "quadratic_mean"},
            {"synthetic", {{"samples", 500}, {"dim", 3}, {"seed", 1}}},
            {"budget", K},
            {"record_trace", false},
            {"sample_schedule", {{"kind", "power_law"}, {"a", 50}, {"b", 0}, {"c", 1}}}};
  const auto measured = execute(parse_config(j), false).metrics["T"].get<std::int64_t>();
  j["sample_schedule"] = {{"kind", "constant"}, {"s", 100}};
  const auto measured_const = execute(parse_config(j), false).metrics["T"].get<std::int64_t>();
  const double cap = 2 * std::sqrt(2.0 * static_cast<double>(K) / 50);
  const bool ok = measured == 28 && T == 28 && static_cast<double>(measured) <= cap && measured_const == 200 &&
                  T_const == 200;
  return {ok, "T = " + std::to_string(measured) + " (bound " + fixed(cap, 1) + ") vs " +
                  std::to_string(measured_const) + " for constant s = 100"};
}

struct A9a {
  std::string train = "data/a9a";
  std::string test = "data/a9a.t";
};

Json a9a_run(const A9a& d, std::uint64_t seed) {
  return {{"problem", "logistic_ridge"},
          {"data", {{"path", d.train}, {"test_path", d.test}}},
          {"nodes", 5},
          {"seed", seed},
          {"budget", 20000},
          {"record_trace", false},
          {"optimum_budget", 0}};
}

struct Measured {
  double accuracy = 0;
  std::int64_t T = 0;
};

Measured constant_run(const A9a& d, std::int64_t s_per_node, int seeds) {
  std::vector<double> acc;
  Measured out;
  for (std::uint64_t seed = 1; seed <= static_cast<std::uint64_t>(seeds); ++seed) {
    Json j = a9a_run(d, seed);
    j["sample_schedule"] = {{"kind", "constant"}, {"s", s_per_node}, {"per_node", true}};
    j["step_schedule"] = {{"kind", "constant"}, {"eta", 0.0025}};
    j["allow_incompatible"] = true;
    const auto m = execute(parse_config(j), false).metrics;
    acc.push_back(m["final"]["accuracy"].get<double>());
    out.T = m["T"].get<std::int64_t>();
  }
  out.accuracy = mean(acc);
  return out;
}

Outcome table_reproduction(const A9a& d) {
  const auto s100 = constant_run(d, 100, 5);
  const auto s1000 = constant_run(d, 1000, 5);
  const bool ok = std::abs(s100.accuracy - 0.8443) <= 0.02 && s100.accuracy - s1000.accuracy >= 0.08;
  return {ok, "s=100/node accuracy " + fixed(s100.accuracy) + " (target 0.8443 +- 0.02), s=1000/node " +
                  fixed(s1000.accuracy) + " (drop " + fixed(s100.accuracy - s1000.accuracy) + ")"};
}

Outcome diminishing_parity(const A9a& d) {
  Measured best;
  std::int64_t best_s = 0;
  for (std::int64_t s : {50, 100, 200, 500, 700, 1000}) {
    const auto m = constant_run(d, s, 5);
    if (m.accuracy > best.accuracy) {
      best = m;
      best_s = s;
    }
  }
  std::vector<double> acc;
  std::vector<double> chosen;
  std::int64_t T = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Json j = a9a_run(d, seed);
    j["sample_schedule"] = {{"kind", "power_law"}, {"a", 20}, {"b", 0}, {"c", 1}, {"per_node", true}};
    double best_obj = INFINITY, best_acc = 0, best_eta = 0;
    for (double eta0 : default_grid()) {
      j["step_schedule"] = {{"kind", "inverse_t"}, {"eta0", eta0}, {"beta", 0.001}};
      try {
        const auto m = execute(parse_config(j), false).metrics;
        const double obj = m["final"]["objective"].get<double>();
        if (std::isfinite(obj) && obj < best_obj) {
          best_obj = obj;
          best_acc = m["final"]["accuracy"].get<double>();
          best_eta = eta0;
          T = m["T"].get<std::int64_t>();
        }
      } catch (const EngineError&) {
      }
    }
    acc.push_back(best_acc);
    chosen.push_back(best_eta);
  }
  const double a = mean(acc);
  const bool ok = best.accuracy - a <= 0.01 && 4 * T <= best.T;
  std::ostringstream etas;
  for (std::size_t q = 0; q < chosen.size(); ++q) etas << (q ? "," : "") << chosen[q];
  return {ok, "diminishing " + fixed(a) + " in " + std::to_string(T) + " rounds (eta0 " + etas.str() +
                  ") vs best constant s=" + std::to_string(best_s) + "/node " + fixed(best.accuracy) + " in " +
                  std::to_string(best.T) + " rounds"};
}

Outcome biased_tolerance(const A9a& d) {
  std::ostringstream detail;
  bool ok = true;
  for (const char* problem : {"logistic_ridge", "logistic_plain"}) {
    double acc[2] = {0, 0};
    int q = 0;
    for (const char* mode : {"unbiased", "biased_by_label"}) {
      std::vector<double> a;
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Json j = a9a_run(d, seed);
        j["problem"] = problem;
        j["nodes"] = 2;
        j["partition"] = mode;
        a.push_back(execute(parse_config(j), false).metrics["final"]["accuracy"].get<double>());
      }
      acc[q++] = mean(a);
    }
    const double diff = std::abs(acc[0] - acc[1]);
    ok = ok && diff <= 0.03;
    detail << problem << ' ' << fixed(acc[0]) << " vs " << fixed(acc[1]) << " (diff " << fixed(diff) << ") ";
  }
  return {ok, detail.str()};
}

Outcome distribution_identity() {
  const auto data = synthetic(1000, 3, 11, true);
  Partition part;
  part.p = {0.4, 0.25, 0.2, 0.15};
  part.locals.resize(4);
  for (std::size_t idx = 0; idx < data->size(); ++idx)
    part.locals[idx < 150 ? 0 : idx < 450 ? 1 : idx < 600 ? 2 : 3].push_back(idx);
  EngineConfig cfg;
  cfg.data = data;
  cfg.problem = Problem::logistic_ridge(3, 0.001);
  cfg.partition = part;
  cfg.samples = SampleSchedule::power_law(50, 0, 1);
  cfg.steps = StepSchedule::inverse_t(0.01, 0.001);
  cfg.budget = 200000;
  cfg.seed = 3;
  const auto res = run(cfg);
  const auto fit = testing::mixture_fit(res.trace, part, data->size());
  return {fit.p_value > 0.01 && fit.draws >= 100000, "chi2 = " + fixed(fit.statistic, 2) + " over " +
                                                         std::to_string(fit.draws) + " draws, p = " + fixed(fit.p_value)};
}

}  // namespace

int main(int argc, char** argv) {
  A9a data;
  if (argc > 1) data.train = argv[1];
  if (argc > 2) data.test = argv[2];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"schedule fidelity", schedule_fidelity},
      {"delay property grid", delay_property_grid},
      {"serial equivalence", serial_equivalence},
      {"delay invariant audit", delay_invariant_audit},
      {"rho bijectivity", rho_bijectivity},
      {"convergence rate", convergence_rate},
      {"communication sub-linearity", communication_sublinearity},
      {"constant sample sizes on a9a", [&] { return table_reproduction(data); }},
      {"diminishing vs constant", [&] { return diminishing_parity(data); }},
      {"biased data tolerance", [&] { return biased_tolerance(data); }},
      {"distribution identity", distribution_identity},
  };
  int failures = 0;
  for (std::size_t q = 0; q < criteria.size(); ++q) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[q].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.ok ? "PASS" : "FAIL", q + 1, criteria[q].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.ok;
  }
  return failures == 0 ? 0 : 1;
}
