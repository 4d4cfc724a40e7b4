#include "dsl/synthetic.hpp"

#include <cmath>

#include "dsl/numkit.hpp"

namespace dsl::synthetic {

namespace {

const accounting::AspectProfile kProfile{};  // rho 128, ffn 8/3, 3 linears, MHA
constexpr double kCtx = 4096;
constexpr double kVocab = 32768;

// grid sizes reused across designs (non-embedding parameters)
double grid_n(int i) {
  return accounting::reference_grid()[static_cast<std::size_t>(i)]
             .n_nonembedding_b *
         1e9;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out.push_back(lo * std::pow(hi / lo, t));
  }
  return out;
}

// center of an IsoFLOP profile under the 6ND rule of thumb at M = 20
double isoflop_center(double budget) { return std::sqrt(budget / 120.0); }

double tokens_for_budget(double budget, double n_params) {
  return budget / (3.0 * default_forward_flops(n_params));
}

double noisy(double value, double sigma, numkit::Rng& rng) {
  if (sigma <= 0) return value;
  return value * std::exp(sigma * rng.normal());
}

}  // namespace

double default_forward_flops(double n_params) {
  return accounting::flops_forward_from_N(n_params, kProfile, kCtx, kVocab);
}

std::vector<fitting::SupervisedRun> supervised_design(
    const laws::SupervisedCoeffs& truth, double noise_sigma,
    std::uint64_t seed) {
  truth.validate();
  numkit::Rng rng(seed);
  std::vector<fitting::SupervisedRun> runs;
  runs.reserve(73);

  // eleven fixed-M models spread across the size grid
  for (int i : {0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30}) {
    const double n = grid_n(i);
    const double d = 20.0 * n;
    runs.push_back({n, d, noisy(laws::supervised_loss(n, d, truth),
                                noise_sigma, rng)});
  }
  // six models trained on 512B tokens
  for (int i : {6, 9, 13, 16, 21, 26}) {
    const double n = grid_n(i);
    const double d = 512e9;
    runs.push_back({n, d, noisy(laws::supervised_loss(n, d, truth),
                                noise_sigma, rng)});
  }
  // four IsoFLOP profiles of fourteen sizes each
  for (double budget : {3e19, 1e20, 3e20, 1e21}) {
    const double center = isoflop_center(budget);
    for (double n : log_spaced(center / 8.0, center * 8.0, 14)) {
      const double d = tokens_for_budget(budget, n);
      runs.push_back({n, d, noisy(laws::supervised_loss(n, d, truth),
                                  noise_sigma, rng)});
    }
  }
  return runs;
}

std::vector<fitting::DistillRun> distillation_design(
    const laws::DistillCoeffs& truth_d, const laws::SupervisedCoeffs& truth_s,
    double noise_sigma, std::uint64_t seed) {
  truth_d.validate();
  truth_s.validate();
  numkit::Rng rng(seed);
  std::vector<fitting::DistillRun> runs;
  runs.reserve(697);

  const auto push = [&](double n_s, double d_s, double n_t, double d_t) {
    const double l_t = laws::supervised_loss(n_t, d_t, truth_s);
    const double l_s = laws::distillation_loss(n_s, d_s, l_t, truth_d, truth_s);
    runs.push_back(
        {n_s, d_s, l_t, noisy(l_s, noise_sigma, rng), n_t, d_t});
  };

  // teacher sizes with M_T = 20 (546M .. 7.75B)
  const int teacher_idx[] = {6, 9, 13, 16, 21, 26};
  // protocol 1: fixed-M teachers, student IsoFLOPs
  for (int ti : teacher_idx) {
    const double n_t = grid_n(ti);
    for (double budget : {3e19, 1e20, 3e20, 1e21}) {
      const double center = isoflop_center(budget);
      for (double n_s : log_spaced(center / 16.0, center * 16.0, 12)) {
        push(n_s, tokens_for_budget(budget, n_s), n_t, 20.0 * n_t);
      }
    }
  }
  // protocol 2: IsoFLOP teachers swept densely into small fixed-M students;
  // the teacher-loss sweep crosses each student's capacity-gap transition
  for (int si : {0, 2, 4, 6}) {
    const double n_s = grid_n(si);
    for (double budget : {3e19, 1e20, 3e20, 1e21}) {
      const double center = isoflop_center(budget);
      for (double n_t : log_spaced(center / 16.0, center * 16.0, 20)) {
        push(n_s, 20.0 * n_s, n_t, tokens_for_budget(budget, n_t));
      }
    }
  }
  // protocol 3: the full fixed-M teacher ladder into fixed-M students at
  // two overtraining levels
  for (int ti : {0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30}) {
    const double n_t = grid_n(ti);
    for (int si : {0, 3, 6, 9}) {
      const double n_s = grid_n(si);
      for (double m_s : {40.0, 160.0}) {
        push(n_s, m_s * n_s, n_t, 20.0 * n_t);
      }
    }
  }
  // one additional 3e21-FLOP student under the largest teacher
  {
    const double n_t = grid_n(26);
    const double n_s = isoflop_center(3e21);
    push(n_s, tokens_for_budget(3e21, n_s), n_t, 20.0 * n_t);
  }
  return runs;
}

}  // namespace dsl::synthetic
