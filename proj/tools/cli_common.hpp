#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dsl/io.hpp"

namespace cli {

// Global flags shared across subcommands, seeded from DSLAW_CONFIG when set.
struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string coeffs = "table4";          // supervised coefficient source
  std::string distill_coeffs = "table4";  // distillation coefficient source
  dsl::accounting::AspectProfile profile{};
  dsl::optimal::PlannerBounds bounds{};
  double n_ctx = 4096;
  double n_vocab = 32768;

  dsl::optimal::FlopModel flop_model() const {
    return {profile, n_ctx, n_vocab};
  }
  dsl::laws::SupervisedCoeffs supervised() const {
    return dsl::io::load_supervised_coeffs(coeffs);
  }
  dsl::laws::DistillCoeffs distillation() const {
    return dsl::io::load_distill_coeffs(distill_coeffs);
  }
};

void register_accounting(CLI::App& app, GlobalOptions& global);
void register_law(CLI::App& app, GlobalOptions& global);
void register_fit(CLI::App& app, GlobalOptions& global);
void register_plan(CLI::App& app, GlobalOptions& global);
void register_capacity_gap(CLI::App& app, GlobalOptions& global);
void register_kernels(CLI::App& app, GlobalOptions& global);

// Writes rows to --out when set, stdout otherwise.
void write_output(const std::vector<std::string>& columns,
                  const std::vector<dsl::io::Row>& rows,
                  const std::string& out_path, dsl::io::GridFormat format);

void write_text(const std::string& text, const std::string& out_path);

std::vector<double> parse_double_list(const std::string& csv);

// "lo:hi:count" log-spaced, or "lin:lo:hi:count" for linear spacing
std::vector<double> parse_axis(const std::string& spec);

}  // namespace cli
