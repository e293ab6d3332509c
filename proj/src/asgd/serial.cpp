#include <cmath>

#include "asgd/engine.hpp"
#include "asgd/engine_internal.hpp"

namespace asgd {

SerialResult sgd_steps(const Problem& p, const DataSet& ds, std::span<const std::size_t> order,
                       const StepFn& step, std::vector<double> w0, bool keep_history) {
  SerialResult out;
  out.w = w0.empty() ? std::vector<double>(p.dim(), 0.0) : std::move(w0);
  if (out.w.size() != p.dim()) throw std::invalid_argument("sgd: w0 has the wrong dimension");
  std::vector<double> g(out.w.size());
  if (keep_history) {
    out.history.reserve(order.size() + 1);
    out.history.push_back(out.w);
  }
  for (std::size_t t = 0; t < order.size(); ++t) {
    grad_into(p, out.w, ds[order[t]], g);
    const double eta = step(static_cast<std::int64_t>(t));
    for (std::size_t j = 0; j < out.w.size(); ++j) out.w[j] -= eta * g[j];
    detail::check_finite(out.w, "the serial SGD iterate");
    if (keep_history) out.history.push_back(out.w);
  }
  out.samples.assign(order.begin(), order.end());
  return out;
}

SerialResult serial_sgd(const Problem& p, const DataSet& ds, std::span<const std::size_t> local,
                        const StepFn& step, std::int64_t K, std::uint64_t seed,
                        std::vector<double> w0, bool keep_history) {
  if (K < 1) throw std::invalid_argument("serial_sgd: K must be >= 1");
  if (ds.empty()) throw std::invalid_argument("serial_sgd: empty data set");
  CounterRng rng(seed, Stream::NodeSampling, 1);
  std::vector<std::size_t> order(static_cast<std::size_t>(K));
  for (auto& idx : order)
    idx = local.empty() ? static_cast<std::size_t>(rng.next_below(ds.size()))
                        : draw_sample_index(local, rng);
  return sgd_steps(p, ds, order, step, std::move(w0), keep_history);
}

SerialResult serial_sgd(const Problem& p, const DataSet& ds, const StepSchedule& steps,
                        std::int64_t K, std::uint64_t seed, bool keep_history) {
  const StepFn step = [&steps](std::int64_t t) { return per_iteration_step(steps, t); };
  return serial_sgd(p, ds, {}, step, K, seed, {}, keep_history);
}

}  // namespace asgd
