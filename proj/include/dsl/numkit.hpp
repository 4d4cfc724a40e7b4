#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace dsl::numkit {

using Vector = Eigen::VectorXd;

/// Thrown when an equality-constrained problem has no feasible point
/// reachable from any start.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// log(exp(a) + exp(b)) with the usual max shift; exact for a == b == -inf.
template <typename Scalar>
Scalar lse(Scalar a, Scalar b) {
  const Scalar m = a > b ? a : b;
  if (!(m > -std::numeric_limits<Scalar>::infinity())) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// log-sum-exp of a sequence. Throws std::invalid_argument on empty input.
double lse(const Eigen::Ref<const Eigen::ArrayXd>& terms);

/// Huber loss: r^2/2 for |r| <= delta, else delta*(|r| - delta/2).
template <typename Scalar>
Scalar huber(Scalar r, Scalar delta) {
  const Scalar a = std::abs(r);
  if (a <= delta) return Scalar(0.5) * r * r;
  return delta * (a - Scalar(0.5) * delta);
}

/// Derivative of the Huber loss with respect to the residual.
template <typename Scalar>
Scalar huber_grad(Scalar r, Scalar delta) {
  if (std::abs(r) <= delta) return r;
  return r > Scalar(0) ? delta : -delta;
}

/// Elementwise box bounds, lower <= upper.
struct Bounds {
  Eigen::ArrayXd lower;
  Eigen::ArrayXd upper;

  static Bounds uniform(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& x, double tol = 0.0) const;
  void clamp(Vector& x) const;
  void validate() const;
};

struct OptimBudget {
  int max_iterations = 2000;  // per start
  double grad_tol = 1e-9;     // inf-norm of the projected gradient
  double step_tol = 1e-12;    // inf-norm of the accepted step
};

struct OptimResult {
  Vector argmin;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;       // the winning start converged
  bool any_converged = false;   // at least one start converged
  int best_start = -1;          // index of the winning start
};

/// Objective with optional gradient output. When `grad` is non-null the
/// callee must fill it; value is always returned.
using ObjectiveGrad = std::function<double(const Vector&, Vector* grad)>;
using Objective = std::function<double(const Vector&)>;

/// Wraps a value-only objective with central-difference gradients.
ObjectiveGrad with_numeric_gradient(Objective f, double rel_step = 1e-6);

/// Multi-start projected L-BFGS over box bounds. Returns the best result
/// across starts (value, then lowest start index). Starts outside the box
/// are rejected with std::invalid_argument. Objectives may throw
/// std::domain_error; a start whose initial point is in the objective's
/// domain error set is skipped, and if every start is skipped the domain
/// error propagates. Non-convergence is reported through `converged`.
OptimResult minimize_bounded(const ObjectiveGrad& objective,
                             const std::vector<Vector>& starts,
                             const Bounds& bounds,
                             const OptimBudget& budget = {});

/// Equality-constrained minimization: min f(x) s.t. c(x) = 0 within box
/// bounds. Starts are first projected onto the constraint surface; the
/// problem is then solved with an augmented penalty sweep. The constraint
/// should be normalized by the caller so that |c| <= 1e-6 is the intended
/// relative feasibility tolerance. Throws InfeasibleError when no start
/// projects onto the constraint.
OptimResult minimize_constrained(const ObjectiveGrad& objective,
                                 const ObjectiveGrad& constraint,
                                 const std::vector<Vector>& starts,
                                 const Bounds& bounds,
                                 const OptimBudget& budget = {});

/// Deterministic splitmix64 stream. Substreams are independent of draws
/// made on the parent, so resamples can be evaluated in any order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard normal (Box-Muller)
  std::size_t index(std::size_t n);      // uniform in [0, n)
  Rng substream(std::uint64_t i) const;  // derived from the seed, not state

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

struct BootstrapResult {
  Eigen::ArrayXd lower;      // per-coefficient lower quantile
  Eigen::ArrayXd upper;      // per-coefficient upper quantile
  Eigen::MatrixXd samples;   // resamples x coefficients
  bool degenerate = false;   // single-record input
};

/// Percentile bootstrap. `statistic` maps a with-replacement index draw to
/// a coefficient vector; intervals are the ((1-level)/2, 1-(1-level)/2)
/// empirical quantiles over `resamples` draws. Deterministic given seed.
BootstrapResult bootstrap(
    std::size_t n_records, int resamples,
    const std::function<Eigen::ArrayXd(const std::vector<std::size_t>&)>& statistic,
    double level, std::uint64_t seed);

/// Linear-interpolation empirical quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

struct ScalarMin {
  double x = 0;
  double f = 0;
  bool on_boundary = false;
};

/// Deterministic 1-D minimization on [lo, hi]: a uniform scan keeps the
/// global basin, golden-section refines it.
ScalarMin minimize_scalar(const std::function<double(double)>& f, double lo,
                          double hi, int scan_points = 2048);

}  // namespace dsl::numkit
