#include "dsl/fitting.hpp"

#include <algorithm>
#include <cmath>

namespace dsl::fitting {

using numkit::Vector;

namespace {

constexpr int kSupDim = 6;   // logE, logA, logB, alpha, beta, gamma
// logA', logB', a', b', g', c0, log c1, log f1, log d1; the transition pair
// (c1, f1) lives in log space so that the c1*f1 ~ const valley is straight
constexpr int kDistDim = 9;

numkit::Bounds supervised_bounds() {
  numkit::Bounds b;
  b.lower.resize(kSupDim);
  b.upper.resize(kSupDim);
  b.lower << -10, -30, -30, 0, 0, 0;
  b.upper << 10, 40, 40, 5, 5, 5;
  return b;
}

numkit::Bounds distillation_bounds() {
  numkit::Bounds b;
  b.lower.resize(kDistDim);
  b.upper.resize(kDistDim);
  b.lower << -30, -30, 0, 0, 0, 0, std::log(1e-2), std::log(1e-3), -10;
  b.upper << 40, 40, 5, 5, 5, 20, std::log(5e3), std::log(20.0), 10;
  return b;
}

laws::SupervisedCoeffs sup_from_params(const Vector& p) {
  laws::SupervisedCoeffs c;
  c.E = std::exp(p[0]);
  c.A = std::exp(p[1]);
  c.B = std::exp(p[2]);
  c.alpha = p[3];
  c.beta = p[4];
  c.gamma = p[5];
  return c;
}

laws::DistillCoeffs dist_from_params(const Vector& p) {
  laws::DistillCoeffs c;
  c.A_p = std::exp(p[0]);
  c.B_p = std::exp(p[1]);
  c.alpha_p = p[2];
  c.beta_p = p[3];
  c.gamma_p = p[4];
  c.c0 = p[5];
  c.c1 = std::exp(p[6]);
  c.f1 = std::exp(p[7]);
  c.d1 = std::exp(p[8]);
  return c;
}

// Cartesian product capped at cfg.max_starts with an even-stride subsample.
std::vector<Vector> build_starts(const std::vector<std::vector<double>>& grids,
                                 int cap) {
  std::size_t total = 1;
  for (const auto& g : grids) {
    if (g.empty()) throw std::invalid_argument("fit: empty init grid");
    total *= g.size();
  }
  const std::size_t count = std::min<std::size_t>(total, static_cast<std::size_t>(cap));
  std::vector<Vector> starts;
  starts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    // stride through the full product so the subsample stays spread out
    std::size_t idx = total <= static_cast<std::size_t>(cap)
                          ? i
                          : (i * total) / count;
    Vector v(static_cast<Eigen::Index>(grids.size()));
    for (std::size_t d = 0; d < grids.size(); ++d) {
      const auto& g = grids[d];
      v[static_cast<Eigen::Index>(d)] = g[idx % g.size()];
      idx /= g.size();
    }
    starts.push_back(std::move(v));
  }
  return starts;
}

struct SupData {
  Eigen::ArrayXd log_n, log_d, log_l;
};

struct DistData {
  Eigen::ArrayXd log_ns, log_ds, log_lt, log_ls, log_ls_tilde;
};

// objective and gradient in the fit parametrization
double sup_objective(const Vector& p, Vector* grad, const SupData& d,
                     double delta) {
  const double logE = p[0], logA = p[1], logB = p[2];
  const double alpha = p[3], beta = p[4], gamma = p[5];
  double total = 0;
  if (grad) grad->setZero(kSupDim);
  for (Eigen::Index i = 0; i < d.log_n.size(); ++i) {
    const double ua = logA - alpha * d.log_n[i];
    const double ub = logB - beta * d.log_d[i];
    const double s = numkit::lse(ua, ub);
    const double ell = numkit::lse(logE, gamma * s);
    const double r = ell - d.log_l[i];
    total += numkit::huber(r, delta);
    if (grad) {
      const double w = numkit::huber_grad(r, delta);
      const double v_e = std::exp(logE - ell);
      const double v_m = std::exp(gamma * s - ell);
      const double wa = std::exp(ua - s);
      const double wb = std::exp(ub - s);
      (*grad)[0] += w * v_e;
      (*grad)[1] += w * v_m * gamma * wa;
      (*grad)[2] += w * v_m * gamma * wb;
      (*grad)[3] += -w * v_m * gamma * wa * d.log_n[i];
      (*grad)[4] += -w * v_m * gamma * wb * d.log_d[i];
      (*grad)[5] += w * v_m * s;
    }
  }
  return total;
}

double dist_objective(const Vector& p, Vector* grad, const DistData& d,
                      double delta) {
  const double logA = p[0], logB = p[1];
  const double alpha = p[2], beta = p[3], gamma = p[4];
  const double c0 = p[5], c1 = std::exp(p[6]), f1 = std::exp(p[7]);
  const double logd1 = p[8];
  double total = 0;
  if (grad) grad->setZero(kDistDim);
  for (Eigen::Index i = 0; i < d.log_ns.size(); ++i) {
    const double ua = logA - alpha * d.log_ns[i];
    const double ub = logB - beta * d.log_ds[i];
    const double s = numkit::lse(ua, ub);
    const double q = (d.log_lt[i] - d.log_ls_tilde[i] - logd1) / f1;
    const double h = numkit::lse(0.0, q);
    const double t = -c0 * d.log_lt[i] - c1 * f1 * h + gamma * s;
    const double ell = numkit::lse(d.log_lt[i], t);
    const double r = ell - d.log_ls[i];
    total += numkit::huber(r, delta);
    if (grad) {
      const double w = numkit::huber_grad(r, delta);
      const double v_m = std::exp(t - ell);
      const double wa = std::exp(ua - s);
      const double wb = std::exp(ub - s);
      const double sq = std::exp(q - h);  // d h / d q
      (*grad)[0] += w * v_m * gamma * wa;
      (*grad)[1] += w * v_m * gamma * wb;
      (*grad)[2] += -w * v_m * gamma * wa * d.log_ns[i];
      (*grad)[3] += -w * v_m * gamma * wb * d.log_ds[i];
      (*grad)[4] += w * v_m * s;
      (*grad)[5] += -w * v_m * d.log_lt[i];
      // chain rule through c1 = exp(p6), f1 = exp(p7)
      (*grad)[6] += -w * v_m * c1 * f1 * h;
      (*grad)[7] += -w * v_m * c1 * f1 * (h - sq * q);
      (*grad)[8] += w * v_m * c1 * sq;
    }
  }
  return total;
}

// multi-start schedule: coarse sweep over every start, full-budget polish of
// the best few
numkit::OptimResult staged_minimize(const numkit::ObjectiveGrad& obj,
                                    const std::vector<Vector>& starts,
                                    const numkit::Bounds& bounds,
                                    const FitConfig& cfg,
                                    std::vector<StartTrace>* trace) {
  numkit::OptimBudget coarse = cfg.budget;
  coarse.max_iterations = cfg.coarse_iterations;

  struct Candidate {
    Vector x;
    double f;
    int start;
    bool converged;
  };
  std::vector<Candidate> results;
  results.reserve(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Vector start = starts[i];
    bounds.clamp(start);  // published grids touch the positivity floor
    numkit::OptimResult r =
        numkit::minimize_bounded(obj, {start}, bounds, coarse);
    results.push_back({r.argmin, r.value, static_cast<int>(i), r.converged});
    if (trace)
      trace->push_back({static_cast<int>(i), r.value, r.converged});
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.f < b.f;
                   });

  const std::size_t polish =
      std::min<std::size_t>(results.size(),
                            static_cast<std::size_t>(std::max(1, cfg.polish_top)));
  numkit::OptimResult best;
  for (std::size_t i = 0; i < polish; ++i) {
    numkit::OptimResult r =
        numkit::minimize_bounded(obj, {results[i].x}, bounds, cfg.budget);
    best.any_converged = best.any_converged || r.converged;
    if (r.value < best.value) {
      best.argmin = r.argmin;
      best.value = r.value;
      best.converged = r.converged;
      best.iterations = r.iterations;
      best.best_start = results[i].start;
    }
  }
  return best;
}

template <typename Run, typename LossOf>
std::vector<Run> apply_filter(const std::vector<Run>& runs,
                              const std::optional<double>& threshold,
                              const LossOf& loss_of) {
  if (!threshold) return runs;
  std::vector<Run> kept;
  kept.reserve(runs.size());
  for (const auto& r : runs)
    if (loss_of(r) >= *threshold) kept.push_back(r);
  return kept;
}

void span_warnings(const Eigen::ArrayXd& log_n, const Eigen::ArrayXd& log_d,
                   std::size_t min_runs, std::vector<std::string>* warnings) {
  const double decade = std::log(10.0);
  if (log_n.size() < static_cast<Eigen::Index>(min_runs))
    warnings->push_back("fewer runs than recommended for identification");
  if (log_n.maxCoeff() - log_n.minCoeff() < decade)
    warnings->push_back("parameter span below one decade");
  if (log_d.maxCoeff() - log_d.minCoeff() < decade)
    warnings->push_back("token span below one decade");
}

}  // namespace

std::vector<std::vector<double>> default_supervised_grids() {
  return {
      {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5},  // log E
      {0.0, 5.0, 10.0, 15.0, 20.0},      // log A
      {0.0, 5.0, 10.0, 15.0, 20.0},      // log B
      {0.0, 0.5, 1.0, 1.5},              // alpha
      {0.0, 0.5, 1.0, 1.5},              // beta
      {0.0, 0.5, 1.0, 1.5},              // gamma
  };
}

std::vector<std::vector<double>> default_distillation_grids() {
  // the c1 and f1 grid values {0, 0.5, 1, 1.5} are clamped to their
  // positivity floors and carried in log space
  const auto logs = [](std::vector<double> v, double floor) {
    for (auto& x : v) x = std::log(std::max(x, floor));
    return v;
  };
  return {
      {0.0, 5.0, 10.0, 15.0, 20.0},                // log A'
      {0.0, 5.0, 10.0, 15.0, 20.0},                // log B'
      {0.0, 0.5, 1.0},                             // alpha'
      {0.0, 0.5, 1.0},                             // beta'
      {0.0, 0.5, 1.0},                             // gamma'
      {0.0, 0.5, 1.0, 1.5},                        // c0
      logs({0.0, 0.5, 1.0, 1.5}, 1e-2),            // log c1
      logs({0.0, 0.5, 1.0, 1.5}, 1e-3),            // log f1
      {-1.0, -0.5, 0.0, 0.5, 1.0},                 // log d1
  };
}

namespace {

SupData build_sup_data(const std::vector<SupervisedRun>& runs,
                       const FitConfig& cfg) {
  const auto kept = apply_filter(runs, cfg.loss_threshold,
                                 [](const SupervisedRun& r) { return r.loss; });
  SupData d;
  d.log_n.resize(static_cast<Eigen::Index>(kept.size()));
  d.log_d.resize(d.log_n.size());
  d.log_l.resize(d.log_n.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& r = kept[i];
    if (!(r.n > 0 && r.d > 0 && r.loss > 0))
      throw std::domain_error("fit: non-positive run field");
    const auto j = static_cast<Eigen::Index>(i);
    d.log_n[j] = std::log(r.n);
    d.log_d[j] = std::log(r.d);
    d.log_l[j] = std::log(r.loss);
  }
  return d;
}

DistData build_dist_data(const std::vector<DistillRun>& runs,
                         const FitConfig& cfg,
                         const laws::SupervisedCoeffs& sc) {
  const auto kept = apply_filter(runs, cfg.loss_threshold,
                                 [](const DistillRun& r) { return r.l_s; });
  DistData d;
  const auto n = static_cast<Eigen::Index>(kept.size());
  d.log_ns.resize(n);
  d.log_ds.resize(n);
  d.log_lt.resize(n);
  d.log_ls.resize(n);
  d.log_ls_tilde.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = kept[static_cast<std::size_t>(i)];
    if (!(r.n_s > 0 && r.d_s > 0 && r.l_t > 0 && r.l_s > 0))
      throw std::domain_error("fit: non-positive run field");
    d.log_ns[i] = std::log(r.n_s);
    d.log_ds[i] = std::log(r.d_s);
    d.log_lt[i] = std::log(r.l_t);
    d.log_ls[i] = std::log(r.l_s);
    d.log_ls_tilde[i] = laws::log_supervised_loss(d.log_ns[i], d.log_ds[i], sc);
  }
  return d;
}

}  // namespace

numkit::ObjectiveGrad supervised_objective(
    const std::vector<SupervisedRun>& runs, const FitConfig& cfg) {
  return [d = build_sup_data(runs, cfg), delta = cfg.huber_delta](
             const Vector& p, Vector* g) { return sup_objective(p, g, d, delta); };
}

numkit::ObjectiveGrad distillation_objective(
    const std::vector<DistillRun>& runs, const FitConfig& cfg,
    const laws::SupervisedCoeffs& sc) {
  return [d = build_dist_data(runs, cfg, sc), delta = cfg.huber_delta](
             const Vector& p, Vector* g) { return dist_objective(p, g, d, delta); };
}

double fit_objective(const laws::SupervisedCoeffs& c,
                     const std::vector<SupervisedRun>& runs,
                     const FitConfig& cfg) {
  c.validate();
  const auto kept = apply_filter(runs, cfg.loss_threshold,
                                 [](const SupervisedRun& r) { return r.loss; });
  double total = 0;
  for (const auto& r : kept) {
    if (!(r.n > 0 && r.d > 0 && r.loss > 0))
      throw std::domain_error("fit_objective: non-positive run field");
    const double ell =
        laws::log_supervised_loss(std::log(r.n), std::log(r.d), c);
    total += numkit::huber(ell - std::log(r.loss), cfg.huber_delta);
  }
  return total;
}

double fit_objective(const laws::DistillCoeffs& dc,
                     const std::vector<DistillRun>& runs, const FitConfig& cfg,
                     const laws::SupervisedCoeffs& sc) {
  dc.validate();
  sc.validate();
  const auto kept = apply_filter(runs, cfg.loss_threshold,
                                 [](const DistillRun& r) { return r.l_s; });
  double total = 0;
  for (const auto& r : kept) {
    if (!(r.n_s > 0 && r.d_s > 0 && r.l_t > 0 && r.l_s > 0))
      throw std::domain_error("fit_objective: non-positive run field");
    const double log_ls_tilde =
        laws::log_supervised_loss(std::log(r.n_s), std::log(r.d_s), sc);
    const double ell = laws::log_distillation_loss(
        std::log(r.n_s), std::log(r.d_s), std::log(r.l_t), log_ls_tilde, dc);
    total += numkit::huber(ell - std::log(r.l_s), cfg.huber_delta);
  }
  return total;
}

FitResult fit_supervised(const std::vector<SupervisedRun>& runs,
                         const FitConfig& cfg) {
  const auto kept = apply_filter(runs, cfg.loss_threshold,
                                 [](const SupervisedRun& r) { return r.loss; });
  if (kept.size() < kSupDim)
    throw std::invalid_argument("fit_supervised: fewer runs than coefficients");

  SupData d;
  d.log_n.resize(static_cast<Eigen::Index>(kept.size()));
  d.log_d.resize(d.log_n.size());
  d.log_l.resize(d.log_n.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& r = kept[i];
    if (!(r.n > 0 && r.d > 0 && r.loss > 0))
      throw std::domain_error("fit_supervised: non-positive run field");
    const auto j = static_cast<Eigen::Index>(i);
    d.log_n[j] = std::log(r.n);
    d.log_d[j] = std::log(r.d);
    d.log_l[j] = std::log(r.loss);
  }

  FitResult out;
  out.used_runs = kept.size();
  span_warnings(d.log_n, d.log_d, 6, &out.warnings);

  const auto grids =
      cfg.init_grids.empty() ? default_supervised_grids() : cfg.init_grids;
  if (grids.size() != kSupDim)
    throw std::invalid_argument("fit_supervised: expected 6 init grids");
  const auto starts = build_starts(grids, cfg.max_starts);

  const auto obj = [&](const Vector& p, Vector* g) {
    return sup_objective(p, g, d, cfg.huber_delta);
  };
  numkit::OptimResult best =
      staged_minimize(obj, starts, supervised_bounds(), cfg, &out.trace);
  if (!best.any_converged)
    throw std::runtime_error("fit_supervised: no start converged");

  out.params = best.argmin.array();
  out.supervised = sup_from_params(best.argmin);
  out.objective = best.value;
  out.names = {"E", "A", "B", "alpha", "beta", "gamma"};
  out.a = out.supervised.beta / (out.supervised.alpha + out.supervised.beta);
  out.b = out.supervised.alpha / (out.supervised.alpha + out.supervised.beta);
  return out;
}

FitResult fit_distillation(const std::vector<DistillRun>& runs,
                           const FitConfig& cfg,
                           const laws::SupervisedCoeffs& sc) {
  sc.validate();
  const auto kept = apply_filter(runs, cfg.loss_threshold,
                                 [](const DistillRun& r) { return r.l_s; });
  if (kept.size() < kDistDim)
    throw std::invalid_argument(
        "fit_distillation: fewer runs than coefficients");

  DistData d;
  const auto n = static_cast<Eigen::Index>(kept.size());
  d.log_ns.resize(n);
  d.log_ds.resize(n);
  d.log_lt.resize(n);
  d.log_ls.resize(n);
  d.log_ls_tilde.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = kept[static_cast<std::size_t>(i)];
    if (!(r.n_s > 0 && r.d_s > 0 && r.l_t > 0 && r.l_s > 0))
      throw std::domain_error("fit_distillation: non-positive run field");
    d.log_ns[i] = std::log(r.n_s);
    d.log_ds[i] = std::log(r.d_s);
    d.log_lt[i] = std::log(r.l_t);
    d.log_ls[i] = std::log(r.l_s);
    d.log_ls_tilde[i] =
        laws::log_supervised_loss(d.log_ns[i], d.log_ds[i], sc);
  }

  FitResult out;
  out.used_runs = kept.size();
  span_warnings(d.log_ns, d.log_ds, 9, &out.warnings);

  const auto grids =
      cfg.init_grids.empty() ? default_distillation_grids() : cfg.init_grids;
  if (grids.size() != kDistDim)
    throw std::invalid_argument("fit_distillation: expected 9 init grids");
  const auto starts = build_starts(grids, cfg.max_starts);

  const auto obj = [&](const Vector& p, Vector* g) {
    return dist_objective(p, g, d, cfg.huber_delta);
  };
  numkit::OptimResult best =
      staged_minimize(obj, starts, distillation_bounds(), cfg, &out.trace);
  if (!best.any_converged)
    throw std::runtime_error("fit_distillation: no start converged");

  out.params = best.argmin.array();
  out.distillation = dist_from_params(best.argmin);
  out.objective = best.value;
  out.names = {"A_p", "B_p", "alpha_p", "beta_p", "gamma_p",
               "c0",  "c1",  "f1",      "d1"};
  out.a = out.distillation.beta_p /
          (out.distillation.alpha_p + out.distillation.beta_p);
  out.b = out.distillation.alpha_p /
          (out.distillation.alpha_p + out.distillation.beta_p);
  return out;
}

namespace {

// natural-scale coefficient vector for interval reporting
Eigen::ArrayXd sup_natural(const Vector& p) {
  Eigen::ArrayXd c(kSupDim);
  c << std::exp(p[0]), std::exp(p[1]), std::exp(p[2]), p[3], p[4], p[5];
  return c;
}

Eigen::ArrayXd dist_natural(const Vector& p) {
  Eigen::ArrayXd c(kDistDim);
  c << std::exp(p[0]), std::exp(p[1]), p[2], p[3], p[4], p[5], p[6], p[7],
      std::exp(p[8]);
  return c;
}

FitConfig warm_config(const FitConfig& cfg) {
  FitConfig warm = cfg;
  warm.coarse_iterations = 500;
  warm.polish_top = 1;
  return warm;
}

}  // namespace

BootstrapIntervals fit_bootstrap(const std::vector<SupervisedRun>& runs,
                                 const FitConfig& cfg) {
  const FitResult full = fit_supervised(runs, cfg);
  const Vector warm_start = full.params.matrix();
  const FitConfig warm = warm_config(cfg);

  const auto statistic = [&](const std::vector<std::size_t>& idx) {
    std::vector<SupervisedRun> sample;
    sample.reserve(idx.size());
    for (auto i : idx) sample.push_back(runs[i]);
    FitConfig one = warm;
    one.init_grids = {{warm_start[0]}, {warm_start[1]}, {warm_start[2]},
                      {warm_start[3]}, {warm_start[4]}, {warm_start[5]}};
    const FitResult r = fit_supervised(sample, one);
    return sup_natural(r.params.matrix());
  };

  const auto boot = numkit::bootstrap(runs.size(), cfg.bootstrap_resamples,
                                      statistic, cfg.ci_level, cfg.seed);
  BootstrapIntervals out;
  out.names = full.names;
  const Eigen::ArrayXd point = sup_natural(full.params.matrix());
  out.lower = boot.lower.min(point);
  out.upper = boot.upper.max(point);
  out.samples = boot.samples;
  return out;
}

BootstrapIntervals fit_bootstrap(const std::vector<DistillRun>& runs,
                                 const FitConfig& cfg,
                                 const laws::SupervisedCoeffs& sc) {
  const FitResult full = fit_distillation(runs, cfg, sc);
  const Vector warm_start = full.params.matrix();
  const FitConfig warm = warm_config(cfg);

  const auto statistic = [&](const std::vector<std::size_t>& idx) {
    std::vector<DistillRun> sample;
    sample.reserve(idx.size());
    for (auto i : idx) sample.push_back(runs[i]);
    FitConfig one = warm;
    one.init_grids.clear();
    for (int j = 0; j < kDistDim; ++j) one.init_grids.push_back({warm_start[j]});
    const FitResult r = fit_distillation(sample, one, sc);
    return dist_natural(r.params.matrix());
  };

  const auto boot = numkit::bootstrap(runs.size(), cfg.bootstrap_resamples,
                                      statistic, cfg.ci_level, cfg.seed);
  BootstrapIntervals out;
  out.names = full.names;
  const Eigen::ArrayXd point = dist_natural(full.params.matrix());
  out.lower = boot.lower.min(point);
  out.upper = boot.upper.max(point);
  out.samples = boot.samples;
  return out;
}

}  // namespace dsl::fitting
