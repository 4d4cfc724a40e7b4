#pragma once

#include <cstdint>
#include <vector>

#include "dsl/accounting.hpp"
#include "dsl/fitting.hpp"
#include "dsl/laws.hpp"

namespace dsl::synthetic {

/// Forward FLOPs per token used when laying out IsoFLOP profiles.
double default_forward_flops(double n_params);

/// 73-run supervised design: eleven fixed token-to-parameter-ratio models
/// (M = 20), six models trained on 512B tokens, and four IsoFLOP profiles
/// (C in {3e19, 1e20, 3e20, 1e21}) of fourteen sizes each. Losses come from
/// the law at `truth` with multiplicative log-normal noise of the given
/// sigma (0 disables noise).
std::vector<fitting::SupervisedRun> supervised_design(
    const laws::SupervisedCoeffs& truth, double noise_sigma,
    std::uint64_t seed);

/// 697-run distillation design mirroring the three experimental protocols:
/// fixed-M teachers into student IsoFLOPs (6 x 4 x 16), IsoFLOP teachers
/// into fixed-M students (4 x 4 x 12), fixed-M teachers into fixed-M
/// students over M_S in {20, 40, 80, 160} (6 x 5 x 4), plus one 3e21-FLOP
/// student run.
std::vector<fitting::DistillRun> distillation_design(
    const laws::DistillCoeffs& truth_d, const laws::SupervisedCoeffs& truth_s,
    double noise_sigma, std::uint64_t seed);

}  // namespace dsl::synthetic
