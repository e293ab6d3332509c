#include "asgd/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace asgd {

namespace {

constexpr double kCeilNudge = 1e-12;

// Ceiling that does not flip upward on representation error just above an integer.
std::int64_t nudged_ceil(double x) {
  return static_cast<std::int64_t>(std::ceil(x - std::abs(x) * kCeilNudge));
}

std::int64_t nudged_floor(double x) {
  return static_cast<std::int64_t>(std::floor(x + std::abs(x) * kCeilNudge));
}

double gamma_of(GammaKind kind, double z) {
  switch (kind) {
    case GammaKind::ConstantOne:
      return 1.0;
    case GammaKind::FourLog:
      if (!(z > 1.0)) throw DomainError("delay: 4*ln(z) requires z > 1, got z = " + std::to_string(z));
      return 4.0 * std::log(z);
  }
  return 1.0;
}

}  // namespace

double DelayFunction::operator()(double x) const {
  const double z = x + m0;
  const double gz = gamma_of(gamma, z);
  if (!(gz > 0.0)) throw DomainError("delay: gamma must be positive");
  if (z < 0.0) throw DomainError("delay: x + M0 must be non-negative");
  return m1 + std::pow(z / gz, 1.0 / g);
}

double eval_delay(const DelayFunction& df, double x) {
  if (x < 0.0) throw DomainError("eval_delay: x must be >= 0");
  return df(x);
}

// ---------------------------------------------------------------------------

SampleSchedule SampleSchedule::constant(std::int64_t s) {
  if (s < 1) throw std::invalid_argument("constant sample size must be >= 1");
  SampleSchedule r;
  r.kind_ = Kind::Constant;
  r.a_ = static_cast<double>(s);
  return r;
}

SampleSchedule SampleSchedule::power_law(double a, double b, double c) {
  if (a < 0 || b < 0 || c < 0) throw std::invalid_argument("power law needs a, b, c >= 0");
  if (a == 0 && b < 1) throw std::invalid_argument("power law with a = 0 needs b >= 1");
  SampleSchedule r;
  r.kind_ = Kind::PowerLaw;
  r.a_ = a;
  r.b_ = b;
  r.c_ = c;
  return r;
}

SampleSchedule SampleSchedule::lemma_power(double g, std::int64_t m, std::int64_t d) {
  if (!(g > 1.0)) throw std::invalid_argument("lemma_power: g must be > 1");
  if (m < 0 || d < 0) throw std::invalid_argument("lemma_power: m and d must be >= 0");
  SampleSchedule r;
  r.kind_ = Kind::LemmaPower;
  r.g_ = g;
  r.m_ = m;
  r.d_ = d;
  return r;
}

SampleSchedule SampleSchedule::lemma_log(std::int64_t m, std::int64_t d) {
  if (m < 0 || d < 0) throw std::invalid_argument("lemma_log: m and d must be >= 0");
  const double ratio = static_cast<double>(m + 1) / (2.0 * static_cast<double>(d + 1));
  if (ratio < std::exp(1.0)) {
    throw DomainError("lemma_log: (m+1)/(2(d+1)) must be >= e; m = " + std::to_string(m) +
                      " is too small for d = " + std::to_string(d));
  }
  SampleSchedule r;
  r.kind_ = Kind::LemmaLog;
  r.g_ = 2.0;
  r.m_ = m;
  r.d_ = d;
  return r;
}

SampleSchedule SampleSchedule::explicit_sizes(std::vector<std::int64_t> sizes) {
  if (sizes.empty()) throw std::invalid_argument("explicit sample sizes must be non-empty");
  for (auto s : sizes)
    if (s < 1) throw std::invalid_argument("explicit sample sizes must be >= 1");
  SampleSchedule r;
  r.kind_ = Kind::Explicit;
  r.list_ = std::move(sizes);
  return r;
}

std::int64_t SampleSchedule::size(std::int64_t i) const {
  if (i < 0) throw std::invalid_argument("sample size index must be >= 0");
  const double di = static_cast<double>(i);
  switch (kind_) {
    case Kind::Constant:
      return static_cast<std::int64_t>(a_);
    case Kind::PowerLaw:
      return nudged_ceil(a_ * std::pow(di, c_) + b_);
    case Kind::LemmaPower: {
      const double x = static_cast<double>(m_ + i + 1) / static_cast<double>(d_ + 1);
      const double s = std::pow(x * (g_ - 1.0) / g_, 1.0 / (g_ - 1.0)) / static_cast<double>(d_ + 1);
      return std::max<std::int64_t>(1, nudged_ceil(s));
    }
    case Kind::LemmaLog: {
      const double num = static_cast<double>(m_ + i + 1);
      const double dd = static_cast<double>(d_ + 1);
      const double arg = num / (2.0 * dd);
      if (!(arg > 1.0)) throw DomainError("lemma_log: logarithm argument must exceed 1");
      return std::max<std::int64_t>(1, nudged_ceil(num / (16.0 * dd * dd) / std::log(arg)));
    }
    case Kind::Explicit:
      return list_[std::min<std::size_t>(static_cast<std::size_t>(i), list_.size() - 1)];
  }
  return 1;
}

std::int64_t SampleSchedule::first_round() const {
  std::int64_t i = 0;
  while (size(i) == 0) ++i;
  return i;
}

std::vector<std::int64_t> SampleSchedule::sizes(std::int64_t count) const {
  std::vector<std::int64_t> out(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
  for (std::int64_t i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = size(i);
  return out;
}

std::int64_t sample_size(const SampleSchedule& sched, std::int64_t i) { return sched.size(i); }

std::int64_t samples_before(const SampleSchedule& sched, std::int64_t i) {
  std::int64_t total = 0;
  for (std::int64_t j = 0; j < i; ++j) total += sched.size(j);
  return total;
}

// ---------------------------------------------------------------------------

StepSchedule StepSchedule::constant(double eta) {
  if (!(eta > 0)) throw std::invalid_argument("constant step must be > 0");
  StepSchedule r;
  r.kind_ = Kind::Constant;
  r.eta0_ = eta;
  return r;
}

StepSchedule StepSchedule::inverse_t(double eta0, double beta) {
  if (!(eta0 > 0) || beta < 0) throw std::invalid_argument("inverse_t needs eta0 > 0, beta >= 0");
  StepSchedule r;
  r.kind_ = Kind::InverseT;
  r.eta0_ = eta0;
  r.beta_ = beta;
  return r;
}

StepSchedule StepSchedule::inverse_sqrt_t(double eta0, double beta) {
  if (!(eta0 > 0) || beta < 0)
    throw std::invalid_argument("inverse_sqrt_t needs eta0 > 0, beta >= 0");
  StepSchedule r;
  r.kind_ = Kind::InverseSqrtT;
  r.eta0_ = eta0;
  r.beta_ = beta;
  return r;
}

StepSchedule StepSchedule::strongly_convex_round(double mu, double m0, double m1) {
  if (!(mu > 0)) throw std::invalid_argument("strongly convex steps need mu > 0");
  if (!(m0 > 1)) throw DomainError("strongly convex steps need M0 > 1");
  StepSchedule r;
  r.kind_ = Kind::StronglyConvexRound;
  r.mu_ = mu;
  r.m0_ = m0;
  r.m1_ = m1;
  return r;
}

double StepSchedule::at(double t) const {
  switch (kind_) {
    case Kind::Constant:
      return eta0_;
    case Kind::InverseT:
      return eta0_ / (1.0 + beta_ * t);
    case Kind::InverseSqrtT:
      return eta0_ / (1.0 + beta_ * std::sqrt(t));
    case Kind::StronglyConvexRound: {
      // (12/mu) / (t + E_t) with E_t = 2 tau(t).
      const double z = m0_ + t;
      return (12.0 / mu_) / (t + 2.0 * m1_ + std::sqrt(z / std::log(z)));
    }
  }
  return eta0_;
}

double round_step(const StepSchedule& sched, const SampleSchedule& samples, std::int64_t i) {
  return sched.at(static_cast<double>(samples_before(samples, i)));
}

double per_iteration_step(const StepSchedule& sched, std::int64_t t) {
  if (sched.kind() == StepSchedule::Kind::StronglyConvexRound)
    throw std::logic_error("strongly convex round steps are defined per round only");
  return sched.at(static_cast<double>(t));
}

// ---------------------------------------------------------------------------

CompatibilityReport verify_delay_compatibility(const SampleSchedule& sched, const DelayFn& tau,
                                               std::int64_t d, std::int64_t i_max) {
  if (d < 0) throw std::invalid_argument("lag threshold d must be >= 0");
  CompatibilityReport report;
  std::vector<std::int64_t> window;  // last d+1 sizes
  std::int64_t total = 0;
  std::int64_t window_sum = 0;
  for (std::int64_t i = 0; i <= i_max; ++i) {
    const std::int64_t s = sched.size(i);
    total += s;
    window.push_back(s);
    window_sum += s;
    if (static_cast<std::int64_t>(window.size()) > d + 1) {
      window_sum -= window.front();
      window.erase(window.begin());
    }
    if (i < d) continue;
    if (tau(static_cast<double>(total)) < 1.0 + static_cast<double>(window_sum)) {
      report.ok = false;
      report.first_violation = i;
      return report;
    }
  }
  return report;
}

CompatibilityReport verify_delay_compatibility(const SampleSchedule& sched,
                                               const DelayFunction& df, std::int64_t d,
                                               std::int64_t i_max) {
  return verify_delay_compatibility(sched, DelayFn([&df](double x) { return df(x); }), d, i_max);
}

DelayShapeReport verify_delay_shape(const DelayFunction& df, double x_min, double x_max,
                                    int points) {
  DelayShapeReport report;
  if (points < 2 || !(x_max > x_min)) throw std::invalid_argument("verify_delay_shape: bad grid");
  // Geometric grid on x + 1 so that x_min = 0 is allowed.
  const double lo = std::log(x_min + 1.0);
  const double hi = std::log(x_max + 1.0);
  double prev_tau = 0, prev_slack = 0;
  for (int k = 0; k < points; ++k) {
    const double x = std::exp(lo + (hi - lo) * k / (points - 1)) - 1.0;
    const double tau = df(x);
    const double slack = x - tau;
    if (df.gamma == GammaKind::FourLog && 4.0 * std::log(x + df.m0) < 1.0)
      report.gamma_at_least_one = false;
    if (k > 0) {
      if (tau < prev_tau) report.tau_nondecreasing = false;
      if (slack < prev_slack) report.slack_nondecreasing = false;
    }
    prev_tau = tau;
    prev_slack = slack;
  }
  return report;
}

// ---------------------------------------------------------------------------

StronglyConvexSchedules make_strongly_convex_schedules(double mu, double L, std::int64_t d,
                                                       std::int64_t m) {
  if (!(mu > 0)) throw std::invalid_argument("make_strongly_convex_schedules: mu must be > 0");
  if (L < mu) throw std::invalid_argument("make_strongly_convex_schedules: L must be >= mu");
  SampleSchedule samples = SampleSchedule::lemma_log(m, d);  // validates the log domain
  const double m_plus_1 = static_cast<double>(m + 1);
  const double dd = static_cast<double>(d + 1);
  const double s0_raw = m_plus_1 / (16.0 * dd * dd) / std::log(m_plus_1 / (2.0 * dd));
  const double m1 = std::max({static_cast<double>(d + 2), 72.0 * L / mu,
                              0.5 * static_cast<double>(nudged_ceil(s0_raw))});
  const double m0 = m_plus_1 * m_plus_1 / 4.0;
  DelayFunction delay{2.0, m0, m1, GammaKind::FourLog};
  StepSchedule steps = StepSchedule::strongly_convex_round(mu, m0, m1);
  return {delay, std::move(samples), steps};
}

DelayFunction lemma_power_delay(double g, std::int64_t m, std::int64_t d) {
  const double m0 = std::pow(static_cast<double>(m + 1) * (g - 1.0) / g, g / (g - 1.0));
  return DelayFunction{g, m0, static_cast<double>(d + 2), GammaKind::ConstantOne};
}

std::int64_t max_constant_sample(double eta, double mu, std::int64_t d) {
  if (!(eta > 0) || !(mu > 0) || d < 0)
    throw std::invalid_argument("max_constant_sample needs eta > 0, mu > 0, d >= 0");
  return nudged_floor(1.0 / (eta * mu * static_cast<double>(d + 1)));
}

std::int64_t rounds_for_budget(const SampleSchedule& sched, std::int64_t budget) {
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  std::int64_t total = 0;
  for (std::int64_t t = 0;; ++t) {
    total += sched.size(t);
    if (total >= budget) return t;
  }
}

std::int64_t communication_rounds(const SampleSchedule& sched, std::int64_t budget) {
  const std::int64_t last = rounds_for_budget(sched, budget);
  std::int64_t count = 0;
  for (std::int64_t j = 0; j <= last; ++j)
    if (sched.size(j) > 0) ++count;
  return count;
}

std::string to_string(SampleSchedule::Kind kind) {
  switch (kind) {
    case SampleSchedule::Kind::Constant: return "constant";
    case SampleSchedule::Kind::PowerLaw: return "power_law";
    case SampleSchedule::Kind::LemmaPower: return "lemma_power";
    case SampleSchedule::Kind::LemmaLog: return "lemma_log";
    case SampleSchedule::Kind::Explicit: return "explicit";
  }
  return "?";
}

std::string to_string(StepSchedule::Kind kind) {
  switch (kind) {
    case StepSchedule::Kind::Constant: return "constant";
    case StepSchedule::Kind::InverseT: return "inverse_t";
    case StepSchedule::Kind::InverseSqrtT: return "inverse_sqrt_t";
    case StepSchedule::Kind::StronglyConvexRound: return "strongly_convex_round";
  }
  return "?";
}

}  // namespace asgd
