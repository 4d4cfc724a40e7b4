#include "dsl/optimal.hpp"

#include <cmath>

#include "dsl/numkit.hpp"

namespace dsl::optimal {

ComputeScenario ComputeScenario::from_name(const std::string& name) {
  for (const auto& s : all())
    if (s.name == name) return s;
  throw std::invalid_argument("unknown compute scenario: " + name);
}

const std::vector<ComputeScenario>& ComputeScenario::all() {
  static const std::vector<ComputeScenario> scenarios = {
      best_case(), teacher_inference(), teacher_pretraining(),
      teacher_pretraining_inference()};
  return scenarios;
}

void ComputeScenario::validate() const {
  const ComputeScenario ref = from_name(name);
  if (ref.delta_lgt != delta_lgt || ref.delta_pre != delta_pre)
    throw std::invalid_argument("ComputeScenario: name does not match flags");
}

void PlannerBounds::validate() const {
  if (!(n_t_lo < n_t_hi && d_s_lo < d_s_hi && d_t_lo < d_t_hi))
    throw std::invalid_argument("PlannerBounds: lower >= upper");
  if (!(n_t_lo > 0 && d_s_lo > 0 && d_t_lo > 0))
    throw std::invalid_argument("PlannerBounds: non-positive bound");
}

double distill_flops(double n_s, double d_s, double n_t, double d_t,
                     const ComputeScenario& scenario, const FlopModel& fm) {
  if (!(n_s > 0 && d_s > 0 && n_t > 0 && d_t > 0))
    throw std::domain_error("distill_flops: non-positive input");
  return 3.0 * fm.forward(n_s) * d_s +
         fm.forward(n_t) *
             (scenario.delta_lgt * d_s + 3.0 * scenario.delta_pre * d_t);
}

double invert_supervised_over_d(double n, double target_loss,
                                const laws::SupervisedCoeffs& sc) {
  if (!(n > 0)) throw std::domain_error("invert_supervised_over_d: N <= 0");
  const double excess = target_loss - sc.E;
  if (!(excess > 0))
    throw std::domain_error("invert_supervised_over_d: target at or below E");
  const double mimic = std::pow(excess, 1.0 / sc.gamma);
  const double data_term = mimic - sc.A * std::pow(n, -sc.alpha);
  if (!(data_term > 0))
    throw std::domain_error(
        "invert_supervised_over_d: target below the model's limit");
  return std::pow(sc.B / data_term, 1.0 / sc.beta);
}

namespace {

constexpr int kScanCoarse = 512;
constexpr int kScanFine = 2048;

bool near_bound(double x, double lo, double hi) {
  const double span = std::log(hi / lo);
  return std::log(x / lo) < 1e-6 * span || std::log(hi / x) < 1e-6 * span;
}

}  // namespace

SupervisedPlan supervised_optimal(double budget,
                                  const laws::SupervisedCoeffs& sc,
                                  const FlopModel& fm,
                                  const PlannerBounds& bounds) {
  if (!(budget > 0)) throw std::domain_error("supervised_optimal: C <= 0");
  bounds.validate();
  sc.validate();

  // tokens are decreasing in N along the budget, so the feasible-N window
  // [n_lo, n_hi] comes from the token bounds
  const auto tokens_at = [&](double n) { return budget / (3.0 * fm.forward(n)); };
  double n_lo = bounds.n_t_lo, n_hi = bounds.n_t_hi;
  if (tokens_at(n_lo) > bounds.d_s_hi) {
    double a = std::log(n_lo), b = std::log(n_hi);
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (a + b);
      (tokens_at(std::exp(m)) > bounds.d_s_hi ? a : b) = m;
    }
    n_lo = std::exp(0.5 * (a + b));
  }
  if (tokens_at(n_hi) < bounds.d_s_lo) {
    double a = std::log(n_lo), b = std::log(n_hi);
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (a + b);
      (tokens_at(std::exp(m)) < bounds.d_s_lo ? b : a) = m;
    }
    n_hi = std::exp(0.5 * (a + b));
  }
  if (!(n_lo < n_hi))
    throw numkit::InfeasibleError("supervised_optimal: empty feasible window");

  const auto loss_at_log_n = [&](double log_n) {
    const double n = std::exp(log_n);
    return laws::supervised_loss(n, tokens_at(n), sc);
  };
  const auto m = numkit::minimize_scalar(loss_at_log_n, std::log(n_lo),
                                         std::log(n_hi), kScanFine);
  SupervisedPlan plan;
  plan.n = std::exp(m.x);
  plan.d = tokens_at(plan.n);
  plan.l = m.f;
  plan.n_at_bound = near_bound(plan.n, bounds.n_t_lo, bounds.n_t_hi);
  plan.d_at_bound = near_bound(plan.d, bounds.d_s_lo, bounds.d_s_hi);
  return plan;
}

SupervisedPlan cheapest_supervised(double target_loss,
                                   const laws::SupervisedCoeffs& sc,
                                   const FlopModel& fm,
                                   const PlannerBounds& bounds) {
  bounds.validate();
  // smallest N able to reach the target with D at its upper bound
  const auto reachable = [&](double n) {
    try {
      return invert_supervised_over_d(n, target_loss, sc) <= bounds.d_t_hi;
    } catch (const std::domain_error&) {
      return false;
    }
  };
  double n_lo = bounds.n_t_lo;
  if (!reachable(n_lo)) {
    if (!reachable(bounds.n_t_hi))
      throw std::domain_error("cheapest_supervised: target unreachable");
    double a = std::log(bounds.n_t_lo), b = std::log(bounds.n_t_hi);
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (a + b);
      (reachable(std::exp(m)) ? b : a) = m;
    }
    n_lo = std::exp(b);
  }
  const auto cost_at_log_n = [&](double log_n) {
    const double n = std::exp(log_n);
    double d;
    try {
      d = invert_supervised_over_d(n, target_loss, sc);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::infinity();
    }
    if (d < bounds.d_t_lo) d = bounds.d_t_lo;  // overshooting is allowed
    if (d > bounds.d_t_hi) return std::numeric_limits<double>::infinity();
    return fm.forward(n) * d;
  };
  const auto m = numkit::minimize_scalar(cost_at_log_n, std::log(n_lo),
                                         std::log(bounds.n_t_hi), kScanFine);
  SupervisedPlan plan;
  plan.n = std::exp(m.x);
  plan.d = std::min(
      std::max(invert_supervised_over_d(plan.n, target_loss, sc),
               bounds.d_t_lo),
      bounds.d_t_hi);
  plan.l = laws::supervised_loss(plan.n, plan.d, sc);
  plan.n_at_bound = near_bound(plan.n, bounds.n_t_lo, bounds.n_t_hi);
  plan.d_at_bound = near_bound(plan.d, bounds.d_t_lo, bounds.d_t_hi);
  return plan;
}

namespace {

struct PlannerContext {
  double n_s;
  double budget;
  ComputeScenario scenario;
  const laws::DistillCoeffs& dc;
  const laws::SupervisedCoeffs& sc;
  const FlopModel& fm;
  const PlannerBounds& bounds;
  double f_s;  // forward FLOPs per student token
};

OptimalPlan finish_plan(const PlannerContext& ctx, double d_s, double n_t,
                        double d_t) {
  OptimalPlan plan;
  plan.scenario = ctx.scenario;
  plan.budget = ctx.budget;
  plan.d_s = d_s;
  plan.n_t = n_t;
  plan.d_t = d_t;
  plan.l_t = laws::supervised_loss(n_t, d_t, ctx.sc);
  plan.l_s = laws::distillation_loss(ctx.n_s, d_s, plan.l_t, ctx.dc, ctx.sc);
  plan.student_train_flops = 3.0 * ctx.f_s * d_s;
  const double f_t = ctx.fm.forward(n_t);
  plan.teacher_logit_flops = ctx.scenario.delta_lgt * f_t * d_s;
  plan.teacher_train_flops = 3.0 * ctx.scenario.delta_pre * f_t * d_t;
  plan.d_s_at_bound = near_bound(d_s, ctx.bounds.d_s_lo, ctx.bounds.d_s_hi);
  plan.n_t_at_bound = near_bound(n_t, ctx.bounds.n_t_lo, ctx.bounds.n_t_hi);
  plan.d_t_at_bound = near_bound(d_t, ctx.bounds.d_t_lo, ctx.bounds.d_t_hi);
  return plan;
}

// best case: the whole budget is student training
OptimalPlan plan_best_case(const PlannerContext& ctx) {
  double d_s = ctx.budget / (3.0 * ctx.f_s);
  bool clipped = false;
  if (d_s > ctx.bounds.d_s_hi) {
    d_s = ctx.bounds.d_s_hi;
    clipped = true;
  }
  const auto best = laws::best_teacher_loss(ctx.n_s, d_s, ctx.dc, ctx.sc);
  const SupervisedPlan teacher =
      cheapest_supervised(best.l_t, ctx.sc, ctx.fm, ctx.bounds);
  OptimalPlan plan = finish_plan(ctx, d_s, teacher.n, teacher.d);
  plan.d_s_at_bound = plan.d_s_at_bound || clipped;
  return plan;
}

// teacher inference: teacher data is free, so the cheapest way to any L_T
// is full overtraining (D_T at its cap) with the smallest adequate N_T
OptimalPlan plan_teacher_inference(const PlannerContext& ctx) {
  const double d_t = ctx.bounds.d_t_hi;
  const auto tokens_at = [&](double n_t) {
    return ctx.budget / (3.0 * ctx.f_s + ctx.fm.forward(n_t));
  };
  // keep D_S >= d_s_lo: solve for the largest admissible teacher
  double n_hi = ctx.bounds.n_t_hi;
  if (tokens_at(n_hi) < ctx.bounds.d_s_lo) {
    double a = std::log(ctx.bounds.n_t_lo), b = std::log(ctx.bounds.n_t_hi);
    for (int i = 0; i < 200; ++i) {
      const double m = 0.5 * (a + b);
      (tokens_at(std::exp(m)) < ctx.bounds.d_s_lo ? b : a) = m;
    }
    n_hi = std::exp(a);
  }
  const auto loss_at_log_nt = [&](double log_nt) {
    const double n_t = std::exp(log_nt);
    const double d_s = std::min(tokens_at(n_t), ctx.bounds.d_s_hi);
    const double l_t = laws::supervised_loss(n_t, d_t, ctx.sc);
    return laws::distillation_loss(ctx.n_s, d_s, l_t, ctx.dc, ctx.sc);
  };
  auto m = numkit::minimize_scalar(loss_at_log_nt, std::log(ctx.bounds.n_t_lo),
                                   std::log(n_hi), kScanFine);
  double n_t = std::exp(m.x);
  double best_d_t = d_t;
  // pinned at the smallest teacher: a weaker teacher needs less data instead
  if (near_bound(n_t, ctx.bounds.n_t_lo, ctx.bounds.n_t_hi)) {
    const double d_s =
        std::min(tokens_at(ctx.bounds.n_t_lo), ctx.bounds.d_s_hi);
    const auto loss_at_log_dt = [&](double log_dt) {
      const double l_t = laws::supervised_loss(ctx.bounds.n_t_lo,
                                               std::exp(log_dt), ctx.sc);
      return laws::distillation_loss(ctx.n_s, d_s, l_t, ctx.dc, ctx.sc);
    };
    const auto md = numkit::minimize_scalar(
        loss_at_log_dt, std::log(ctx.bounds.d_t_lo),
        std::log(ctx.bounds.d_t_hi), kScanFine);
    if (md.f < m.f) {
      n_t = ctx.bounds.n_t_lo;
      best_d_t = std::exp(md.x);
    }
  }
  const double d_s = std::min(tokens_at(n_t), ctx.bounds.d_s_hi);
  return finish_plan(ctx, d_s, n_t, best_d_t);
}

// teacher pretraining: parametrized by L_T with a compute-optimal teacher;
// whatever the teacher does not spend goes to student tokens
OptimalPlan plan_teacher_pretraining(const PlannerContext& ctx) {
  const double floor_cost = 3.0 * ctx.f_s * ctx.bounds.d_s_lo;
  const double lt_lo = ctx.sc.E + 1e-3;
  const double lt_hi = 8.0;
  const auto eval = [&](double l_t) -> std::pair<double, SupervisedPlan> {
    SupervisedPlan teacher;
    try {
      teacher = cheapest_supervised(l_t, ctx.sc, ctx.fm, ctx.bounds);
    } catch (const std::domain_error&) {
      return {std::numeric_limits<double>::infinity(), {}};
    }
    const double teacher_cost = 3.0 * ctx.fm.forward(teacher.n) * teacher.d;
    if (teacher_cost > ctx.budget - floor_cost)
      return {std::numeric_limits<double>::infinity(), teacher};
    const double d_s = std::min((ctx.budget - teacher_cost) / (3.0 * ctx.f_s),
                                ctx.bounds.d_s_hi);
    return {laws::distillation_loss(ctx.n_s, d_s, l_t, ctx.dc, ctx.sc),
            teacher};
  };
  const auto m = numkit::minimize_scalar(
      [&](double lt) { return eval(lt).first; }, lt_lo, lt_hi, kScanCoarse);
  const auto [l_s, teacher] = eval(m.x);
  if (!std::isfinite(l_s))
    throw numkit::InfeasibleError(
        "distill_optimal: no affordable teacher in the pretraining scenario");
  const double teacher_cost = 3.0 * ctx.fm.forward(teacher.n) * teacher.d;
  const double d_s = std::min((ctx.budget - teacher_cost) / (3.0 * ctx.f_s),
                              ctx.bounds.d_s_hi);
  return finish_plan(ctx, d_s, teacher.n, teacher.d);
}

// teacher pretraining + inference: genuinely two-dimensional in
// (log N_T, log D_T); student tokens are eliminated through the budget
OptimalPlan plan_pretraining_inference(const PlannerContext& ctx) {
  const auto tokens_at = [&](double n_t, double d_t) {
    return (ctx.budget - 3.0 * ctx.fm.forward(n_t) * d_t) /
           (3.0 * ctx.f_s + ctx.fm.forward(n_t));
  };
  const auto objective = [&](double log_nt, double log_dt) {
    const double n_t = std::exp(log_nt), d_t = std::exp(log_dt);
    const double d_s_raw = tokens_at(n_t, d_t);
    if (d_s_raw < ctx.bounds.d_s_lo) {
      // smooth pull back toward the feasible region
      return 1e3 + std::log1p(ctx.bounds.d_s_lo - d_s_raw);
    }
    const double d_s = std::min(d_s_raw, ctx.bounds.d_s_hi);
    const double l_t = laws::supervised_loss(n_t, d_t, ctx.sc);
    return laws::distillation_loss(ctx.n_s, d_s, l_t, ctx.dc, ctx.sc);
  };

  const double ln_lo = std::log(ctx.bounds.n_t_lo);
  const double ln_hi = std::log(ctx.bounds.n_t_hi);
  const double ld_lo = std::log(ctx.bounds.d_t_lo);
  const double ld_hi = std::log(ctx.bounds.d_t_hi);

  // deterministic coarse grid
  constexpr int kGrid = 48;
  double best_f = std::numeric_limits<double>::infinity();
  double best_nt = ln_lo, best_dt = ld_lo;
  for (int i = 0; i <= kGrid; ++i) {
    const double lnt = ln_lo + (ln_hi - ln_lo) * i / kGrid;
    for (int j = 0; j <= kGrid; ++j) {
      const double ldt = ld_lo + (ld_hi - ld_lo) * j / kGrid;
      const double f = objective(lnt, ldt);
      if (f < best_f) {
        best_f = f;
        best_nt = lnt;
        best_dt = ldt;
      }
    }
  }
  if (!std::isfinite(best_f) || best_f >= 1e3)
    throw numkit::InfeasibleError(
        "distill_optimal: budget cannot cover any teacher configuration");

  // multi-start polish: grid winner, box corners and center
  numkit::Bounds box;
  box.lower.resize(2);
  box.upper.resize(2);
  box.lower << ln_lo, ld_lo;
  box.upper << ln_hi, ld_hi;
  std::vector<numkit::Vector> starts;
  const auto add_start = [&](double a, double b) {
    numkit::Vector v(2);
    v << a, b;
    starts.push_back(v);
  };
  add_start(best_nt, best_dt);
  add_start(ln_lo, ld_lo);
  add_start(ln_lo, ld_hi);
  add_start(ln_hi, ld_lo);
  add_start(ln_hi, ld_hi);
  add_start(0.5 * (ln_lo + ln_hi), 0.5 * (ld_lo + ld_hi));
  add_start(best_nt, 0.5 * (ld_lo + ld_hi));
  add_start(0.5 * (ln_lo + ln_hi), best_dt);

  const auto wrapped = numkit::with_numeric_gradient(
      [&](const numkit::Vector& v) { return objective(v[0], v[1]); }, 1e-7);
  numkit::OptimBudget budget;
  budget.max_iterations = 400;
  const auto r = numkit::minimize_bounded(wrapped, starts, box, budget);

  double lnt = best_nt, ldt = best_dt;
  if (r.best_start >= 0 && r.value < best_f) {
    lnt = r.argmin[0];
    ldt = r.argmin[1];
  }
  const double n_t = std::exp(lnt), d_t = std::exp(ldt);
  const double d_s =
      std::min(std::max(tokens_at(n_t, d_t), ctx.bounds.d_s_lo),
               ctx.bounds.d_s_hi);
  return finish_plan(ctx, d_s, n_t, d_t);
}

}  // namespace

OptimalPlan distill_optimal(double n_s, double budget,
                            const ComputeScenario& scenario,
                            const laws::DistillCoeffs& dc,
                            const laws::SupervisedCoeffs& sc,
                            const FlopModel& fm, const PlannerBounds& bounds) {
  if (!(n_s > 0)) throw std::domain_error("distill_optimal: N_S <= 0");
  if (!(budget > 0)) throw std::domain_error("distill_optimal: C <= 0");
  scenario.validate();
  bounds.validate();
  dc.validate();
  sc.validate();

  PlannerContext ctx{n_s,    budget, scenario, dc,
                     sc,     fm,     bounds,   fm.forward(n_s)};
  if (budget < 3.0 * ctx.f_s * bounds.d_s_lo)
    throw numkit::InfeasibleError(
        "distill_optimal: budget below the minimum student training cost");

  if (scenario.delta_lgt == 0 && scenario.delta_pre == 0)
    return plan_best_case(ctx);
  if (scenario.delta_lgt == 1 && scenario.delta_pre == 0)
    return plan_teacher_inference(ctx);
  if (scenario.delta_lgt == 0 && scenario.delta_pre == 1)
    return plan_teacher_pretraining(ctx);
  return plan_pretraining_inference(ctx);
}

TeacherChoice teacher_select(double n_s, double budget, bool budget_is_tokens,
                             const std::vector<TeacherOption>& teachers,
                             const ComputeScenario& scenario,
                             const laws::DistillCoeffs& dc,
                             const laws::SupervisedCoeffs& sc,
                             const FlopModel& fm) {
  if (teachers.empty())
    throw std::invalid_argument("teacher_select: empty teacher list");
  TeacherChoice best;
  best.l_s = std::numeric_limits<double>::infinity();
  const double f_s = fm.forward(n_s);
  for (std::size_t i = 0; i < teachers.size(); ++i) {
    const auto& t = teachers[i];
    const double d_s =
        budget_is_tokens
            ? budget
            : budget / (3.0 * f_s + scenario.delta_lgt * fm.forward(t.n_t));
    const double l_s = laws::distillation_loss(n_s, d_s, t.l_t, dc, sc);
    if (l_s < best.l_s) {
      best.index = i;
      best.l_s = l_s;
      best.d_s = d_s;
    }
  }
  return best;
}

std::optional<double> break_even(double n_s, const ComputeScenario& scenario,
                                 const laws::DistillCoeffs& dc,
                                 const laws::SupervisedCoeffs& sc,
                                 const FlopModel& fm,
                                 const PlannerBounds& bounds, double lo,
                                 double hi, double resolution_decades) {
  const double f_s = fm.forward(n_s);
  const auto supervised_wins = [&](double budget) {
    const double d = std::min(budget / (3.0 * f_s), bounds.d_s_hi);
    const double sup = laws::supervised_loss(n_s, d, sc);
    const double dist = distill_optimal(n_s, budget, scenario, dc, sc, fm,
                                        bounds)
                            .l_s;
    return sup <= dist;
  };

  const double decades = std::log10(hi / lo);
  const int coarse = std::max(2, static_cast<int>(std::ceil(decades / 0.25)));
  double prev = lo;
  bool prev_wins = supervised_wins(lo);
  if (prev_wins) return lo;
  for (int i = 1; i <= coarse; ++i) {
    const double c = lo * std::pow(hi / lo, static_cast<double>(i) / coarse);
    const bool wins = supervised_wins(c);
    if (wins) {
      // bisect [prev, c] down to the requested resolution in decades
      double a = std::log10(prev), b = std::log10(c);
      while (b - a > resolution_decades) {
        const double m = 0.5 * (a + b);
        (supervised_wins(std::pow(10.0, m)) ? b : a) = m;
      }
      return std::pow(10.0, b);
    }
    prev = c;
    prev_wins = wins;
  }
  return std::nullopt;
}

EfficiencyRatios efficiency_ratios(double n_s, double target_loss,
                                   const ComputeScenario& scenario,
                                   const laws::DistillCoeffs& dc,
                                   const laws::SupervisedCoeffs& sc,
                                   const FlopModel& fm,
                                   const PlannerBounds& bounds) {
  const double limit = laws::supervised_limit(n_s, sc);
  if (!(target_loss > limit))
    throw std::domain_error("efficiency_ratios: target below the student limit");

  const double d_sup = invert_supervised_over_d(n_s, target_loss, sc);
  const double c_sup = 3.0 * fm.forward(n_s) * d_sup;

  const auto distill_reaches = [&](double budget) {
    try {
      return distill_optimal(n_s, budget, scenario, dc, sc, fm, bounds).l_s <=
             target_loss;
    } catch (const numkit::InfeasibleError&) {
      return false;
    }
  };
  // bracket the smallest adequate distillation budget
  double lo = c_sup / 1024.0, hi = c_sup;
  int guard = 0;
  while (!distill_reaches(hi)) {
    hi *= 2.0;
    if (++guard > 60)
      throw std::domain_error("efficiency_ratios: target unreachable by distillation");
  }
  while (distill_reaches(lo) && lo > 1e10) lo /= 4.0;
  double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < 60; ++i) {
    const double m = 0.5 * (a + b);
    (distill_reaches(std::exp(m)) ? b : a) = m;
  }
  const double c_dist = std::exp(b);
  const OptimalPlan plan =
      distill_optimal(n_s, c_dist, scenario, dc, sc, fm, bounds);

  EfficiencyRatios out;
  out.distill_budget = c_dist;
  out.supervised_budget = c_sup;
  out.compute_ratio = c_dist / c_sup;
  out.data_ratio =
      (plan.d_s + scenario.delta_pre * plan.d_t) / d_sup;
  return out;
}

}  // namespace dsl::optimal
