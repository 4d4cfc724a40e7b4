#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dsl/accounting.hpp"
#include "dsl/laws.hpp"

namespace dsl::optimal {

/// Which teacher costs enter the budget: logit inference for the student
/// targets and/or teacher pretraining.
struct ComputeScenario {
  int delta_lgt = 0;
  int delta_pre = 0;
  std::string name = "best-case";

  static ComputeScenario best_case() { return {0, 0, "best-case"}; }
  static ComputeScenario teacher_inference() { return {1, 0, "teacher-inference"}; }
  static ComputeScenario teacher_pretraining() { return {0, 1, "teacher-pretraining"}; }
  static ComputeScenario teacher_pretraining_inference() {
    return {1, 1, "teacher-pretraining+inference"};
  }
  static ComputeScenario from_name(const std::string& name);
  static const std::vector<ComputeScenario>& all();
  void validate() const;  // name <-> flag bijection
};

/// Forward-FLOPs-per-token model for a fixed-aspect-ratio family.
struct FlopModel {
  accounting::AspectProfile profile{};
  double n_ctx = 4096;
  double n_vocab = 32768;

  double forward(double n_params) const {
    return accounting::flops_forward_from_N(n_params, profile, n_ctx, n_vocab);
  }
  double train(double n_params, double tokens) const {
    return 3.0 * forward(n_params) * tokens;
  }
};

struct PlannerBounds {
  double n_t_lo = 1e6, n_t_hi = 1e17;
  double d_s_lo = 1e6, d_s_hi = 1e17;
  double d_t_lo = 1e6, d_t_hi = 1e17;
  void validate() const;
};

struct OptimalPlan {
  double d_s = 0, n_t = 0, d_t = 0;
  double l_t = 0, l_s = 0;
  double student_train_flops = 0;
  double teacher_logit_flops = 0;
  double teacher_train_flops = 0;
  bool d_s_at_bound = false, n_t_at_bound = false, d_t_at_bound = false;
  ComputeScenario scenario;
  double budget = 0;

  double total_flops() const {
    return student_train_flops + teacher_logit_flops + teacher_train_flops;
  }
};

/// Total distillation FLOPs:
/// 3 F(N_S) D_S + F(N_T) (delta_lgt D_S + 3 delta_pre D_T).
double distill_flops(double n_s, double d_s, double n_t, double d_t,
                     const ComputeScenario& scenario, const FlopModel& fm);

struct SupervisedPlan {
  double n = 0, d = 0, l = 0;
  bool n_at_bound = false, d_at_bound = false;
};

/// Lowest supervised cross-entropy subject to 3 F(N) D = C.
SupervisedPlan supervised_optimal(double budget, const laws::SupervisedCoeffs& sc,
                                  const FlopModel& fm,
                                  const PlannerBounds& bounds = {});

/// Tokens D with L(n, D) = target, solved in closed form. Throws
/// std::domain_error when the target is at or below the model's limit.
double invert_supervised_over_d(double n, double target_loss,
                                const laws::SupervisedCoeffs& sc);

/// Supervised (N, D) reaching `target_loss` at the lowest F(N) * D cost;
/// used both for teacher-pretraining planning and for reporting teachers
/// in scenarios where their cost is amortized.
SupervisedPlan cheapest_supervised(double target_loss,
                                   const laws::SupervisedCoeffs& sc,
                                   const FlopModel& fm,
                                   const PlannerBounds& bounds = {});

/// Compute-optimal distillation of a fixed-size student under a budget.
/// Throws numkit::InfeasibleError when the budget cannot train the student
/// on at least bounds.d_s_lo tokens.
OptimalPlan distill_optimal(double n_s, double budget,
                            const ComputeScenario& scenario,
                            const laws::DistillCoeffs& dc,
                            const laws::SupervisedCoeffs& sc,
                            const FlopModel& fm = {},
                            const PlannerBounds& bounds = {});

struct TeacherChoice {
  std::size_t index = 0;
  double l_s = 0;
  double d_s = 0;  // student tokens implied by the budget
};

struct TeacherOption {
  double l_t = 0;
  double n_t = 0;
};

/// Pick the teacher minimizing predicted student loss. Token budgets make
/// teacher size free; compute budgets charge delta_lgt logit inference,
/// D_S = C / (3 F(N_S) + delta_lgt F(N_T)).
TeacherChoice teacher_select(double n_s, double budget, bool budget_is_tokens,
                             const std::vector<TeacherOption>& teachers,
                             const ComputeScenario& scenario,
                             const laws::DistillCoeffs& dc,
                             const laws::SupervisedCoeffs& sc,
                             const FlopModel& fm = {});

/// Smallest budget where supervised training of the same student matches
/// optimal distillation, scanned over [lo, hi] at the given resolution in
/// decades. Empty when there is no crossover in range.
std::optional<double> break_even(double n_s, const ComputeScenario& scenario,
                                 const laws::DistillCoeffs& dc,
                                 const laws::SupervisedCoeffs& sc,
                                 const FlopModel& fm = {},
                                 const PlannerBounds& bounds = {},
                                 double lo = 1e18, double hi = 1e28,
                                 double resolution_decades = 1e-2);

struct EfficiencyRatios {
  double compute_ratio = 0;  // distillation compute / supervised compute
  double data_ratio = 0;     // (D_S + delta_pre D_T) / supervised tokens
  double distill_budget = 0;
  double supervised_budget = 0;
};

/// Resource multiples for reaching `target_loss` with a fixed student size.
/// Throws std::domain_error when the target is unreachable by either route.
EfficiencyRatios efficiency_ratios(double n_s, double target_loss,
                                   const ComputeScenario& scenario,
                                   const laws::DistillCoeffs& dc,
                                   const laws::SupervisedCoeffs& sc,
                                   const FlopModel& fm = {},
                                   const PlannerBounds& bounds = {});

}  // namespace dsl::optimal
