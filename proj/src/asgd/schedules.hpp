#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace asgd {

/// Thrown when a schedule or delay function is evaluated outside its domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class GammaKind { ConstantOne, FourLog };

/// Permissible delay tau(x) = M1 + ((x + M0) / gamma(x + M0))^(1/g).
struct DelayFunction {
  double g = 2.0;
  double m0 = 0.0;
  double m1 = 0.0;
  GammaKind gamma = GammaKind::ConstantOne;

  double operator()(double x) const;
};

/// Evaluates tau(x); throws DomainError when gamma is not positive at x + M0.
double eval_delay(const DelayFunction& df, double x);

/// Scalar delay used by the checks below; any callable x -> tau(x).
using DelayFn = std::function<double(double)>;

/// Total sample sizes s_i per round.
///
/// PowerLaw uses the raw index: s_i = a * i^c + b, so a = 50, b = 0 gives s_0 = 0.
/// Execution skips such a leading empty round; see first_round().
class SampleSchedule {
 public:
  enum class Kind { Constant, PowerLaw, LemmaPower, LemmaLog, Explicit };

  static SampleSchedule constant(std::int64_t s);
  static SampleSchedule power_law(double a, double b, double c);
  static SampleSchedule lemma_power(double g, std::int64_t m, std::int64_t d);
  static SampleSchedule lemma_log(std::int64_t m, std::int64_t d);
  static SampleSchedule explicit_sizes(std::vector<std::int64_t> sizes);

  Kind kind() const { return kind_; }
  std::int64_t size(std::int64_t i) const;
  /// Index of the first round with s_i > 0 (1 for power_law with b = 0, else 0).
  std::int64_t first_round() const;

  /// Sizes for rounds [0, count).
  std::vector<std::int64_t> sizes(std::int64_t count) const;

  // Recipe parameters (meaning depends on kind).
  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double g() const { return g_; }
  std::int64_t m() const { return m_; }
  std::int64_t d() const { return d_; }
  const std::vector<std::int64_t>& explicit_list() const { return list_; }

 private:
  Kind kind_ = Kind::Constant;
  double a_ = 0, b_ = 0, c_ = 1, g_ = 2;
  std::int64_t m_ = 0, d_ = 0;
  std::vector<std::int64_t> list_;
};

std::int64_t sample_size(const SampleSchedule& sched, std::int64_t i);

/// Sum of s_j for j < i.
std::int64_t samples_before(const SampleSchedule& sched, std::int64_t i);

enum class StepMode { PerRound, PerIteration };

/// Step size families; StronglyConvexRound carries the constants of the
/// strongly convex recipe and is defined per round only.
class StepSchedule {
 public:
  enum class Kind { Constant, InverseT, InverseSqrtT, StronglyConvexRound };

  static StepSchedule constant(double eta);
  static StepSchedule inverse_t(double eta0, double beta);
  static StepSchedule inverse_sqrt_t(double eta0, double beta);
  static StepSchedule strongly_convex_round(double mu, double m0, double m1);

  Kind kind() const { return kind_; }
  double eta0() const { return eta0_; }
  double beta() const { return beta_; }
  double mu() const { return mu_; }
  double m0() const { return m0_; }
  double m1() const { return m1_; }

  /// Family value at iteration t (the continuous-t formula).
  double at(double t) const;

 private:
  Kind kind_ = Kind::Constant;
  double eta0_ = 0, beta_ = 0, mu_ = 1, m0_ = 0, m1_ = 0;
};

/// Round step eta_bar_i: the family evaluated at t = sum_{j<i} s_j.
double round_step(const StepSchedule& sched, const SampleSchedule& samples, std::int64_t i);

/// Per-iteration step for the InverseT / InverseSqrtT / Constant families.
double per_iteration_step(const StepSchedule& sched, std::int64_t t);

struct CompatibilityReport {
  bool ok = true;
  std::optional<std::int64_t> first_violation;
};

/// Checks tau(sum_{j<=i} s_j) >= 1 + sum_{j=i-d}^{i} s_j for every i in [d, i_max].
CompatibilityReport verify_delay_compatibility(const SampleSchedule& sched, const DelayFn& tau,
                                               std::int64_t d, std::int64_t i_max);
CompatibilityReport verify_delay_compatibility(const SampleSchedule& sched,
                                               const DelayFunction& df, std::int64_t d,
                                               std::int64_t i_max);

/// Numeric check that tau and x - tau(x) are nondecreasing on a geometric grid
/// of `points` values in [x_min, x_max], and that gamma >= 1 there.
struct DelayShapeReport {
  bool tau_nondecreasing = true;
  bool slack_nondecreasing = true;
  bool gamma_at_least_one = true;
  bool ok() const { return tau_nondecreasing && slack_nondecreasing && gamma_at_least_one; }
};
DelayShapeReport verify_delay_shape(const DelayFunction& df, double x_min, double x_max,
                                    int points = 1000);

struct StronglyConvexSchedules {
  DelayFunction delay;
  SampleSchedule samples;
  StepSchedule steps;
};

/// Delay function, sample sizes and round steps for mu-strongly convex,
/// L-smooth problems with lag threshold d and shift m.
StronglyConvexSchedules make_strongly_convex_schedules(double mu, double L, std::int64_t d,
                                                       std::int64_t m);

/// Delay function matching lemma_power(g, m, d): gamma = 1, M1 = d + 2 and the
/// smallest admissible M0.
DelayFunction lemma_power_delay(double g, std::int64_t m, std::int64_t d);

/// Largest constant sample size compatible with a constant step: floor(1 / (eta mu (d+1))).
std::int64_t max_constant_sample(double eta, double mu, std::int64_t d);

/// Smallest T with sum_{j=0}^{T} s_j >= K.
std::int64_t rounds_for_budget(const SampleSchedule& sched, std::int64_t budget);

/// Number of non-empty rounds among 0..rounds_for_budget(K); this is the
/// number of update/broadcast exchanges a run with budget K performs.
std::int64_t communication_rounds(const SampleSchedule& sched, std::int64_t budget);

std::string to_string(SampleSchedule::Kind kind);
std::string to_string(StepSchedule::Kind kind);

}  // namespace asgd
