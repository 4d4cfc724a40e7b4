#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsl/laws.hpp"
#include "dsl/numkit.hpp"

namespace dsl::fitting {

struct SupervisedRun {
  double n = 0;     // parameters
  double d = 0;     // tokens
  double loss = 0;  // observed cross-entropy (nats)
};

struct DistillRun {
  double n_s = 0;
  double d_s = 0;
  double l_t = 0;
  double l_s = 0;
  std::optional<double> n_t;  // teacher provenance, unused by the fit
  std::optional<double> d_t;
};

struct FitConfig {
  double huber_delta = 1e-4;
  // one grid per coefficient, in the fit parametrization (logs for scale
  // coefficients); empty means the published defaults
  std::vector<std::vector<double>> init_grids;
  std::optional<double> loss_threshold;  // keep runs with loss >= threshold
  // tighter than the generic optimizer defaults: the transition-coefficient
  // valley is flat enough that a 1e-9 gradient stop strands the fit ~1%
  // from the exact-recovery point
  numkit::OptimBudget budget{4000, 1e-12, 1e-16};
  int max_starts = 4096;       // deterministic subsample cap
  int polish_top = 16;         // best coarse starts refined at full budget
  int coarse_iterations = 60;  // per-start budget for the grid sweep
  int bootstrap_resamples = 4096;
  double ci_level = 0.9;
  std::uint64_t seed = 0;
};

struct StartTrace {
  int start_index = 0;
  double objective = 0;
  bool converged = false;
};

struct FitResult {
  Eigen::ArrayXd params;  // fit parametrization
  laws::SupervisedCoeffs supervised;  // valid for supervised fits
  laws::DistillCoeffs distillation;   // valid for distillation fits
  double objective = 0;
  std::vector<StartTrace> trace;
  std::vector<std::string> names;  // natural-coefficient order
  double a = 0;  // beta / (alpha + beta): compute-optimal size exponent
  double b = 0;  // alpha / (alpha + beta): compute-optimal data exponent
  std::size_t used_runs = 0;
  std::vector<std::string> warnings;
};

struct BootstrapIntervals {
  std::vector<std::string> names;
  Eigen::ArrayXd lower;
  Eigen::ArrayXd upper;
  Eigen::MatrixXd samples;  // resamples x coefficients, natural scale
};

// Published initialization grids (in the fit parametrization).
std::vector<std::vector<double>> default_supervised_grids();
std::vector<std::vector<double>> default_distillation_grids();

// Objectives in the fit parametrization with analytic gradients. The
// supervised parameters are (log E, log A, log B, alpha, beta, gamma); the
// distillation parameters are (log A', log B', alpha', beta', gamma', c0,
// log c1, log f1, log d1). The returned closures own their data.
numkit::ObjectiveGrad supervised_objective(
    const std::vector<SupervisedRun>& runs, const FitConfig& cfg);
numkit::ObjectiveGrad distillation_objective(
    const std::vector<DistillRun>& runs, const FitConfig& cfg,
    const laws::SupervisedCoeffs& sc);

// Summed Huber loss of log-residuals, log(model) - log(observed).
double fit_objective(const laws::SupervisedCoeffs& c,
                     const std::vector<SupervisedRun>& runs,
                     const FitConfig& cfg);
double fit_objective(const laws::DistillCoeffs& dc,
                     const std::vector<DistillRun>& runs, const FitConfig& cfg,
                     const laws::SupervisedCoeffs& sc);

FitResult fit_supervised(const std::vector<SupervisedRun>& runs,
                         const FitConfig& cfg);
FitResult fit_distillation(const std::vector<DistillRun>& runs,
                           const FitConfig& cfg,
                           const laws::SupervisedCoeffs& sc);

// Percentile bootstrap over run resamples; refits are warm-started at the
// full-data estimate. Deterministic given cfg.seed.
BootstrapIntervals fit_bootstrap(const std::vector<SupervisedRun>& runs,
                                 const FitConfig& cfg);
BootstrapIntervals fit_bootstrap(const std::vector<DistillRun>& runs,
                                 const FitConfig& cfg,
                                 const laws::SupervisedCoeffs& sc);

}  // namespace dsl::fitting
