#include "dsl/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace dsl::numkit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double lse(const Eigen::Ref<const Eigen::ArrayXd>& terms) {
  if (terms.size() == 0) throw std::invalid_argument("lse: empty input");
  const double m = terms.maxCoeff();
  if (!(m > -kInf)) return m;
  return m + std::log((terms - m).exp().sum());
}

Bounds Bounds::uniform(int dim, double lo, double hi) {
  Bounds b;
  b.lower = Eigen::ArrayXd::Constant(dim, lo);
  b.upper = Eigen::ArrayXd::Constant(dim, hi);
  b.validate();
  return b;
}

void Bounds::validate() const {
  if (lower.size() != upper.size())
    throw std::invalid_argument("Bounds: dimension mismatch");
  if ((lower > upper).any())
    throw std::invalid_argument("Bounds: lower > upper");
}

bool Bounds::contains(const Vector& x, double tol) const {
  return (x.array() >= lower - tol).all() && (x.array() <= upper + tol).all();
}

void Bounds::clamp(Vector& x) const {
  x = x.array().max(lower).min(upper).matrix();
}

ObjectiveGrad with_numeric_gradient(Objective f, double rel_step) {
  return [f = std::move(f), rel_step](const Vector& x, Vector* grad) {
    const double fx = f(x);
    if (grad) {
      grad->resize(x.size());
      Vector xp = x;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = rel_step * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        (*grad)[i] = (fp - fm) / (2 * h);
      }
    }
    return fx;
  };
}

namespace {

// Gradient components that would push out of the active box are zeroed.
Vector projected_gradient(const Vector& x, const Vector& g, const Bounds& b) {
  Vector pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] <= b.lower[i] && g[i] > 0) pg[i] = 0;
    if (x[i] >= b.upper[i] && g[i] < 0) pg[i] = 0;
  }
  return pg;
}

struct SingleResult {
  Vector x;
  double f = kInf;
  int iterations = 0;
  bool converged = false;
  bool domain_error_at_start = false;
};

SingleResult lbfgs_single(const ObjectiveGrad& objective, Vector x,
                          const Bounds& bounds, const OptimBudget& budget) {
  SingleResult out;
  bounds.clamp(x);
  Vector g(x.size());
  double f;
  try {
    f = objective(x, &g);
  } catch (const std::domain_error&) {
    out.domain_error_at_start = true;
    return out;
  }
  if (!std::isfinite(f)) {
    out.domain_error_at_start = true;
    return out;
  }

  const int m = 10;
  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;

  // stagnation window for the relative-decrease stopping rule
  constexpr int kWindow = 50;
  constexpr double kFtolRel = 5e-9;
  std::deque<double> f_hist;

  Vector x_new(x.size()), g_new(x.size());
  for (int iter = 0; iter < budget.max_iterations; ++iter) {
    out.iterations = iter + 1;
    Vector pg = projected_gradient(x, g, bounds);
    if (pg.lpNorm<Eigen::Infinity>() <= budget.grad_tol) {
      out.converged = true;
      break;
    }
    f_hist.push_back(f);
    if (static_cast<int>(f_hist.size()) > kWindow) {
      f_hist.pop_front();
      if (f_hist.front() - f <= kFtolRel * std::abs(f)) {
        out.converged = true;
        break;
      }
    }

    // two-loop recursion
    Vector d = -g;
    const int k = static_cast<int>(s_hist.size());
    std::vector<double> alpha(k);
    for (int i = k - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= alpha[i] * y_hist[i];
    }
    if (k > 0) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      d *= gamma;
    }
    for (int i = 0; i < k; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }

    // restrict to the feasible cone at active bounds
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] <= bounds.lower[i] && d[i] < 0) d[i] = 0;
      if (x[i] >= bounds.upper[i] && d[i] > 0) d[i] = 0;
    }
    if (d.dot(g) >= -1e-14 * d.norm() * g.norm() || d.norm() == 0) {
      d = -pg;
      if (d.norm() == 0) {
        out.converged = true;
        break;
      }
    }

    // backtracking Armijo search on the projected path
    double t = (iter == 0 && k == 0) ? std::min(1.0, 1.0 / d.norm()) : 1.0;
    const double c1 = 1e-4;
    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + t * d;
      bounds.clamp(x_new);
      const Vector step = x_new - x;
      if (step.lpNorm<Eigen::Infinity>() <= budget.step_tol) break;
      double ft;
      try {
        ft = objective(x_new, &g_new);
      } catch (const std::domain_error&) {
        t *= 0.5;
        continue;
      }
      if (std::isfinite(ft) && ft <= f + c1 * g.dot(step)) {
        f_new = ft;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // no acceptable step: the step-size test is the stopping rule
      out.converged = true;
      break;
    }

    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > m) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = x_new;
    f = f_new;
    g = g_new;
    if (s.lpNorm<Eigen::Infinity>() <= budget.step_tol) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  out.f = f;
  return out;
}

}  // namespace

OptimResult minimize_bounded(const ObjectiveGrad& objective,
                             const std::vector<Vector>& starts,
                             const Bounds& bounds, const OptimBudget& budget) {
  bounds.validate();
  if (starts.empty()) throw std::invalid_argument("minimize_bounded: no starts");
  for (const auto& s : starts) {
    if (s.size() != bounds.dim())
      throw std::invalid_argument("minimize_bounded: start dimension mismatch");
    if (!bounds.contains(s, 1e-12))
      throw std::invalid_argument("minimize_bounded: start outside bounds");
  }

  OptimResult best;
  bool all_domain_errors = true;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    SingleResult r = lbfgs_single(objective, starts[i], bounds, budget);
    if (r.domain_error_at_start) continue;
    all_domain_errors = false;
    best.any_converged = best.any_converged || r.converged;
    if (r.f < best.value) {
      best.argmin = r.x;
      best.value = r.f;
      best.iterations = r.iterations;
      best.converged = r.converged;
      best.best_start = static_cast<int>(i);
    }
  }
  if (all_domain_errors)
    throw std::domain_error("minimize_bounded: objective rejected every start");
  return best;
}

namespace {

// Newton steps along the constraint gradient; returns false when the
// constraint value cannot be driven below tol.
bool project_onto_constraint(const ObjectiveGrad& constraint, Vector& x,
                             const Bounds& bounds, double tol) {
  Vector gc(x.size());
  for (int it = 0; it < 100; ++it) {
    double c;
    try {
      c = constraint(x, &gc);
    } catch (const std::domain_error&) {
      return false;
    }
    if (std::abs(c) <= tol) return true;
    const double gn2 = gc.squaredNorm();
    if (gn2 <= 0 || !std::isfinite(gn2)) return false;
    x -= (c / gn2) * gc;
    bounds.clamp(x);
  }
  double c_final;
  try {
    c_final = constraint(x, nullptr);
  } catch (const std::domain_error&) {
    return false;
  }
  return std::abs(c_final) <= tol;
}

}  // namespace

OptimResult minimize_constrained(const ObjectiveGrad& objective,
                                 const ObjectiveGrad& constraint,
                                 const std::vector<Vector>& starts,
                                 const Bounds& bounds,
                                 const OptimBudget& budget) {
  bounds.validate();
  if (starts.empty())
    throw std::invalid_argument("minimize_constrained: no starts");
  constexpr double kFeasTol = 1e-6;

  OptimResult best;
  bool any_feasible = false;
  for (std::size_t si = 0; si < starts.size(); ++si) {
    Vector x0 = starts[si];
    bounds.clamp(x0);
    if (!project_onto_constraint(constraint, x0, bounds, kFeasTol)) continue;
    any_feasible = true;

    // augmented penalty sweep
    double lambda = 0.0;
    double mu = 10.0;
    Vector x = x0;
    double prev_c = kInf;
    for (int outer = 0; outer < 14; ++outer) {
      auto merit = [&](const Vector& v, Vector* grad) {
        Vector gof, goc;
        Vector* gf = grad ? &gof : nullptr;
        Vector* gc = grad ? &goc : nullptr;
        const double f = objective(v, gf);
        const double c = constraint(v, gc);
        if (grad) *grad = gof + (lambda + mu * c) * goc;
        return f + lambda * c + 0.5 * mu * c * c;
      };
      OptimBudget inner = budget;
      inner.max_iterations = std::min(budget.max_iterations, 500);
      OptimResult r = minimize_bounded(merit, {x}, bounds, inner);
      if (r.best_start >= 0) x = r.argmin;
      const double c = constraint(x, nullptr);
      lambda += mu * c;
      if (std::abs(c) <= 0.1 * kFeasTol) break;
      if (std::abs(c) > 0.25 * prev_c) mu *= 10.0;
      if (mu > 1e14) break;
      prev_c = std::abs(c);
    }
    // final polish exactly on the surface
    project_onto_constraint(constraint, x, bounds, 0.01 * kFeasTol);

    double f;
    try {
      f = objective(x, nullptr);
    } catch (const std::domain_error&) {
      continue;
    }
    const double cfin = std::abs(constraint(x, nullptr));
    const bool feasible = cfin <= kFeasTol;
    const bool better = feasible && f < best.value;
    if (better) {
      best.argmin = x;
      best.value = f;
      best.converged = true;
      best.any_converged = true;
      best.best_start = static_cast<int>(si);
    }
  }
  if (!any_feasible)
    throw InfeasibleError(
        "minimize_constrained: no start projects onto the constraint");
  if (best.best_start < 0)
    throw InfeasibleError(
        "minimize_constrained: no feasible minimizer found");
  return best;
}

std::uint64_t Rng::next_u64() {
  // splitmix64 (Steele, Lea, Flood 2014)
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: n == 0");
  // rejection-free Lemire reduction; bias is negligible for n << 2^64
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

Rng Rng::substream(std::uint64_t i) const {
  Rng child(seed_ ^ (0xD1B54A32D192ED03ULL * (i + 1)));
  child.next_u64();
  return child;
}

ScalarMin minimize_scalar(const std::function<double(double)>& f, double lo,
                          double hi, int scan_points) {
  if (!(hi > lo)) throw std::invalid_argument("minimize_scalar: hi <= lo");
  if (scan_points < 2) scan_points = 2;
  double best_x = lo, best_f = f(lo);
  for (int i = 1; i <= scan_points; ++i) {
    const double x = lo + (hi - lo) * i / scan_points;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - (hi - lo) / scan_points);
  double b = std::min(hi, best_x + (hi - lo) / scan_points);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0;
       it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(a) + std::abs(b));
       ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  ScalarMin out;
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  if (fm < best_f) {
    out.x = xm;
    out.f = fm;
  } else {
    out.x = best_x;
    out.f = best_f;
  }
  out.on_boundary =
      (out.x - lo) < 1e-9 * (hi - lo) || (hi - out.x) < 1e-9 * (hi - lo);
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1 - frac) + values[hi] * frac;
}

BootstrapResult bootstrap(
    std::size_t n_records, int resamples,
    const std::function<Eigen::ArrayXd(const std::vector<std::size_t>&)>& statistic,
    double level, std::uint64_t seed) {
  if (n_records == 0) throw std::invalid_argument("bootstrap: no records");
  if (resamples < 1) throw std::invalid_argument("bootstrap: resamples < 1");
  if (!(level > 0 && level < 1))
    throw std::invalid_argument("bootstrap: level outside (0,1)");

  BootstrapResult out;
  out.degenerate = n_records == 1;

  const Rng root(seed);
  std::vector<std::size_t> idx(n_records);
  for (int r = 0; r < resamples; ++r) {
    Rng stream = root.substream(static_cast<std::uint64_t>(r));
    for (auto& k : idx) k = stream.index(n_records);
    const Eigen::ArrayXd stat = statistic(idx);
    if (r == 0) out.samples.resize(resamples, stat.size());
    if (stat.size() != out.samples.cols())
      throw std::invalid_argument("bootstrap: statistic size changed");
    out.samples.row(r) = stat.transpose();
  }

  const double a = (1 - level) / 2;
  const auto dim = out.samples.cols();
  out.lower.resize(dim);
  out.upper.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    std::vector<double> col(out.samples.col(j).data(),
                            out.samples.col(j).data() + resamples);
    out.lower[j] = quantile(col, a);
    out.upper[j] = quantile(std::move(col), 1 - a);
  }
  return out;
}

}  // namespace dsl::numkit
