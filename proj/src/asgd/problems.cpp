#include "asgd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asgd {

namespace {

constexpr double kSigmoidClamp = 1e-12;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_dims(const Problem& p, std::span<const double> w, SampleRef s) {
  if (w.size() != p.dim())
    throw std::invalid_argument("model dimension " + std::to_string(w.size()) +
                                " does not match problem dimension " + std::to_string(p.dim()));
  if (s.x.size() != p.feature_dim())
    throw std::invalid_argument("sample dimension " + std::to_string(s.x.size()) +
                                " does not match problem feature dimension " +
                                std::to_string(p.feature_dim()));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
  return acc;
}

double sq_norm(std::span<const double> a) { return dot(a, a); }

}  // namespace

Problem Problem::logistic_plain(std::size_t feature_dim) {
  if (feature_dim == 0) throw std::invalid_argument("feature dimension must be >= 1");
  Problem p;
  p.kind_ = ProblemKind::LogisticPlain;
  p.feature_dim_ = feature_dim;
  return p;
}

Problem Problem::logistic_ridge(std::size_t feature_dim, double lambda) {
  if (feature_dim == 0) throw std::invalid_argument("feature dimension must be >= 1");
  if (!(lambda > 0)) throw std::invalid_argument("ridge lambda must be > 0");
  Problem p;
  p.kind_ = ProblemKind::LogisticRidge;
  p.feature_dim_ = feature_dim;
  p.lambda_ = lambda;
  return p;
}

Problem Problem::quadratic_mean(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("dimension must be >= 1");
  Problem p;
  p.kind_ = ProblemKind::QuadraticMean;
  p.feature_dim_ = dim;
  return p;
}

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::LogisticPlain: return "logistic_plain";
    case ProblemKind::LogisticRidge: return "logistic_ridge";
    case ProblemKind::QuadraticMean: return "quadratic_mean";
  }
  return "?";
}

double margin(const Problem& p, std::span<const double> w, std::span<const double> x) {
  const std::size_t d = p.feature_dim();
  return dot(w.first(d), x) + w[d];
}

void grad_into(const Problem& p, std::span<const double> w, SampleRef s, std::span<double> out) {
  check_dims(p, w, s);
  if (out.size() != w.size()) throw std::invalid_argument("gradient buffer has wrong dimension");
  if (p.kind() == ProblemKind::QuadraticMean) {
    for (std::size_t j = 0; j < w.size(); ++j) out[j] = w[j] - s.x[j];
    return;
  }
  const std::size_t d = p.feature_dim();
  const double r = sigmoid(margin(p, w, s.x)) - static_cast<double>(s.label);
  for (std::size_t j = 0; j < d; ++j) out[j] = r * s.x[j];
  out[d] = r;
  if (p.kind() == ProblemKind::LogisticRidge)
    for (std::size_t j = 0; j <= d; ++j) out[j] += p.lambda() * w[j];
}

std::vector<double> grad(const Problem& p, std::span<const double> w, SampleRef s) {
  std::vector<double> out(w.size());
  grad_into(p, w, s, out);
  return out;
}

namespace {

double data_loss(const Problem& p, std::span<const double> w, SampleRef s) {
  if (p.kind() == ProblemKind::QuadraticMean) {
    double acc = 0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += (w[j] - s.x[j]) * (w[j] - s.x[j]);
    return 0.5 * acc;
  }
  const double sig = std::clamp(sigmoid(margin(p, w, s.x)), kSigmoidClamp, 1.0 - kSigmoidClamp);
  return s.label == 1 ? -std::log(sig) : -std::log1p(-sig);
}

double regularizer(const Problem& p, std::span<const double> w) {
  return p.kind() == ProblemKind::LogisticRidge ? 0.5 * p.lambda() * sq_norm(w) : 0.0;
}

}  // namespace

double loss(const Problem& p, std::span<const double> w, SampleRef s) {
  check_dims(p, w, s);
  return data_loss(p, w, s) + regularizer(p, w);
}

double objective(const Problem& p, std::span<const double> w, const DataSet& ds) {
  if (ds.empty()) throw std::invalid_argument("objective: empty data set");
  check_dims(p, w, ds[0]);
  double acc = 0;
  for (std::size_t r = 0; r < ds.size(); ++r) acc += data_loss(p, w, ds[r]);
  return acc / static_cast<double>(ds.size()) + regularizer(p, w);
}

std::vector<double> full_gradient(const Problem& p, std::span<const double> w, const DataSet& ds) {
  if (ds.empty()) throw std::invalid_argument("full_gradient: empty data set");
  std::vector<double> acc(w.size(), 0.0), g(w.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    grad_into(p, w, ds[r], g);
    for (std::size_t j = 0; j < w.size(); ++j) acc[j] += g[j];
  }
  for (double& v : acc) v /= static_cast<double>(ds.size());
  return acc;
}

double accuracy(const Problem& p, std::span<const double> w, const DataSet& ds) {
  if (!p.is_logistic()) throw std::invalid_argument("accuracy is defined for logistic problems");
  if (ds.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const int predicted = sigmoid(margin(p, w, ds[r].x)) >= 0.5 ? 1 : 0;
    if (predicted == ds[r].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

Smoothness smoothness_constants(const Problem& p, const DataSet& ds) {
  if (ds.empty()) throw std::invalid_argument("smoothness_constants: empty data set");
  if (p.kind() == ProblemKind::QuadraticMean) return {1.0, 1.0};
  double max_sq = 0;
  for (std::size_t r = 0; r < ds.size(); ++r) max_sq = std::max(max_sq, sq_norm(ds[r].x) + 1.0);
  return {p.lambda(), 0.25 * max_sq + p.lambda()};
}

double noise_constant(const Problem& p, std::span<const double> w, const DataSet& ds) {
  if (ds.empty()) throw std::invalid_argument("noise_constant: empty data set");
  std::vector<double> g(w.size());
  double acc = 0;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    grad_into(p, w, ds[r], g);
    acc += sq_norm(g);
  }
  return 2.0 * acc / static_cast<double>(ds.size());
}

}  // namespace asgd
