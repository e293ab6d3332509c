#include <algorithm>
#include <cmath>

#include "asgd/engine.hpp"

namespace asgd {

namespace {

std::int64_t ceil_delay(double tau) {
  return static_cast<std::int64_t>(std::ceil(tau - std::abs(tau) * 1e-12));
}

}  // namespace

AuditReport audit_consistency(const RunTrace& trace, const DelayFn& tau) {
  AuditReport report;
  for (const auto& r : trace.records) {
    if (r.t < 0) {
      report.ok = false;
      report.detail = "trace has a missing gradient record";
      report.first_violation = report.checked;
      return report;
    }
    const auto& base = trace.broadcasts.at(static_cast<std::size_t>(r.base));
    std::int64_t first_missing = r.t;
    for (std::int64_t j = base.k; j <= r.i; ++j) {
      for (int c = 1; c <= trace.n; ++c) {
        if (c == r.c && j >= r.own_from && j <= r.i) continue;
        if (base.contains(j, c)) continue;
        const auto& pos = trace.positions[static_cast<std::size_t>(j)][static_cast<std::size_t>(c - 1)];
        if (!pos.empty()) first_missing = std::min(first_missing, pos.front());
      }
    }
    const std::int64_t allowed = r.t - ceil_delay(tau(static_cast<double>(r.t)));
    ++report.checked;
    if (first_missing < allowed) {
      report.ok = false;
      report.first_violation = r.t;
      report.detail = "iteration " + std::to_string(r.t) + " misses update " +
                      std::to_string(first_missing) + " older than t - tau(t) = " +
                      std::to_string(allowed);
      return report;
    }
  }
  return report;
}

AuditReport audit_consistency(const RunTrace& trace, const DelayFunction& tau) {
  return audit_consistency(trace, DelayFn([&tau](double x) { return tau(x); }));
}

AuditReport audit_gate_invariant(const RunTrace& trace, const DelayFn& tau) {
  AuditReport report;
  for (const auto& r : trace.records) {
    ++report.checked;
    if (r.t_delay <= 0) continue;
    const double bound = tau(static_cast<double>(std::max<std::int64_t>(r.t_glob, 0)));
    if (bound < static_cast<double>(r.t_delay)) {
      report.ok = false;
      report.first_violation = r.t;
      report.detail = "t = " + std::to_string(r.t) + ": t_delay " + std::to_string(r.t_delay) +
                      " > tau(t_glob) = " + std::to_string(bound);
      return report;
    }
  }
  return report;
}

AuditReport audit_round_sums(const RunTrace& trace, double rel_tol) {
  AuditReport report;
  if (trace.gradients.empty() || trace.records.empty()) {
    report.ok = false;
    report.detail = "trace has no recorded gradients";
    return report;
  }
  for (std::int64_t i = 0; i < trace.table.rounds(); ++i) {
    const auto& applied = trace.applied[static_cast<std::size_t>(i)];
    if (applied.empty()) continue;
    std::vector<double> expected(applied.size(), 0.0);
    for (std::int64_t t = trace.table.offset(i); t < trace.table.offset(i + 1); ++t) {
      const auto& g = trace.gradients[static_cast<std::size_t>(t)];
      const double eta = trace.records[static_cast<std::size_t>(t)].step;
      for (std::size_t j = 0; j < g.size(); ++j) expected[j] += eta * g[j];
    }
    double diff = 0, norm = 1e-300;
    for (std::size_t j = 0; j < expected.size(); ++j) {
      diff = std::max(diff, std::abs(expected[j] - applied[j]));
      norm = std::max(norm, std::abs(expected[j]));
    }
    ++report.checked;
    if (diff > rel_tol * norm) {
      report.ok = false;
      report.first_violation = i;
      report.detail = "round " + std::to_string(i) + " applied update differs by " + std::to_string(diff);
      return report;
    }
  }
  return report;
}

GateEquivalenceReport audit_gate_equivalence(const EngineConfig& config) {
  GateEquivalenceReport report;
  if (!config.delay) throw EngineError(EngineError::Kind::Invalid, "gate equivalence needs a delay function");
  const DelayFunction df = *config.delay;
  const DelayFn tau = [df](double x) { return df(x); };
  auto check = [&](Gate gate) {
    EngineConfig cfg = config;
    cfg.gate = gate;
    cfg.record_trace = true;
    cfg.backend = Backend::Event;
    try {
      return audit_gate_invariant(run(cfg).trace, tau);
    } catch (const EngineError& e) {
      AuditReport failed;
      failed.ok = false;
      failed.detail = e.what();
      return failed;
    }
  };
  report.lag = check(Gate::Lag);
  report.tau = check(Gate::Tau);
  report.ok = report.lag.ok && report.tau.ok;
  return report;
}

}  // namespace asgd
