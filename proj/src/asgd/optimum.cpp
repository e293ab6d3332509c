#include <Eigen/Dense>
#include <cmath>

#include "asgd/engine.hpp"

namespace asgd {

namespace {

double norm2(const std::vector<double>& v) {
  double acc = 0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

void newton_polish(const Problem& p, const DataSet& ds, std::vector<double>& w) {
  const auto dim = static_cast<Eigen::Index>(p.dim());
  const std::size_t d = p.feature_dim();
  const double m = static_cast<double>(ds.size());
  for (int iter = 0; iter < 100; ++iter) {
    const auto g = full_gradient(p, w, ds);
    if (norm2(g) < 1e-12) return;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd x(dim);
    for (std::size_t r = 0; r < ds.size(); ++r) {
      const auto s = ds[r];
      for (std::size_t j = 0; j < d; ++j) x[static_cast<Eigen::Index>(j)] = s.x[j];
      x[static_cast<Eigen::Index>(d)] = 1.0;
      const double sig = 1.0 / (1.0 + std::exp(-margin(p, w, s.x)));
      H.selfadjointView<Eigen::Lower>().rankUpdate(x, sig * (1.0 - sig) / m);
    }
    H = H.selfadjointView<Eigen::Lower>();
    const double reg = p.lambda() + 1e-12 * std::max(1.0, H.diagonal().maxCoeff());
    H.diagonal().array() += reg;
    const Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(g.data(), dim);
    const Eigen::VectorXd step = H.ldlt().solve(gv);
    const double f0 = objective(p, w, ds);
    const double slope = gv.dot(step);
    double alpha = 1.0;
    std::vector<double> trial(w.size());
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < w.size(); ++j) trial[j] = w[j] - alpha * step[static_cast<Eigen::Index>(j)];
      if (objective(p, trial, ds) <= f0 - 1e-4 * alpha * slope) break;
      alpha *= 0.5;
    }
    if (trial == w) return;
    w = trial;
  }
}

}  // namespace

OptimumInfo find_optimum(const Problem& p, const DataSet& ds, std::int64_t budget,
                         std::uint64_t seed) {
  if (ds.empty()) throw std::invalid_argument("find_optimum: empty data set");
  OptimumInfo info;
  if (p.kind() == ProblemKind::QuadraticMean) {
    info.w_star.assign(p.dim(), 0.0);
    for (std::size_t r = 0; r < ds.size(); ++r)
      for (std::size_t j = 0; j < p.dim(); ++j) info.w_star[j] += ds[r].x[j];
    for (double& v : info.w_star) v /= static_cast<double>(ds.size());
    info.exact = true;
  } else if (budget <= 0) {
    info.w_star.assign(p.dim(), 0.0);
    info.degenerate = true;
  } else {
    const double L = smoothness_constants(p, ds).L;
    const double m = static_cast<double>(ds.size());
    const StepFn step = [L, m](std::int64_t t) { return (1.0 / L) / (1.0 + static_cast<double>(t) / m); };
    info.w_star = serial_sgd(p, ds, {}, step, budget, seed).w;
    newton_polish(p, ds, info.w_star);
  }
  info.F_star = objective(p, info.w_star, ds);
  if (!std::isfinite(info.F_star))
    throw EngineError(EngineError::Kind::NonFinite, "non-finite objective at the optimum estimate");
  info.N = noise_constant(p, info.w_star, ds);
  info.grad_norm = norm2(full_gradient(p, info.w_star, ds));
  return info;
}

}  // namespace asgd
