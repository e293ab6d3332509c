#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "asgd/data.hpp"

namespace asgd {

enum class ProblemKind { LogisticPlain, LogisticRidge, QuadraticMean };

/// Finite-sum objective F(w) = mean_i f(w; xi_i).
///
/// Logistic problems use the model w = (w_bar, b) of dimension d_feat + 1 with
/// loss -[y log s + (1-y) log(1-s)], s = sigmoid(w_bar.x + b); the ridge variant
/// adds (lambda/2)|w|^2 to every sample, bias included. QuadraticMean uses
/// f(w; xi) = |w - x|^2 / 2 and ignores the label.
class Problem {
 public:
  static Problem logistic_plain(std::size_t feature_dim);
  static Problem logistic_ridge(std::size_t feature_dim, double lambda);
  static Problem quadratic_mean(std::size_t dim);

  ProblemKind kind() const { return kind_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t dim() const { return kind_ == ProblemKind::QuadraticMean ? feature_dim_ : feature_dim_ + 1; }
  double lambda() const { return lambda_; }
  bool is_logistic() const { return kind_ != ProblemKind::QuadraticMean; }

 private:
  ProblemKind kind_ = ProblemKind::QuadraticMean;
  std::size_t feature_dim_ = 0;
  double lambda_ = 0;
};

std::string to_string(ProblemKind kind);

/// out = grad f(w; s). Throws std::invalid_argument on dimension mismatch.
void grad_into(const Problem& p, std::span<const double> w, SampleRef s, std::span<double> out);
std::vector<double> grad(const Problem& p, std::span<const double> w, SampleRef s);

double loss(const Problem& p, std::span<const double> w, SampleRef s);
double objective(const Problem& p, std::span<const double> w, const DataSet& ds);
std::vector<double> full_gradient(const Problem& p, std::span<const double> w, const DataSet& ds);

/// Raw linear score w_bar.x + b for logistic problems.
double margin(const Problem& p, std::span<const double> w, std::span<const double> x);
/// Fraction of samples whose sigmoid thresholded at 0.5 matches the label.
double accuracy(const Problem& p, std::span<const double> w, const DataSet& ds);

struct Smoothness {
  double mu = 0;
  double L = 0;
};

/// Logistic: L = max_i |[x_i; 1]|^2 / 4 + lambda, mu = lambda. Quadratic: (1, 1).
Smoothness smoothness_constants(const Problem& p, const DataSet& ds);

/// N = 2 mean_i |grad f(w; xi_i)|^2.
double noise_constant(const Problem& p, std::span<const double> w, const DataSet& ds);

}  // namespace asgd
