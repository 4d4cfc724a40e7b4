#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "dsl/accounting.hpp"
#include "dsl/fitting.hpp"
#include "dsl/optimal.hpp"

namespace dsl::io {

enum class RunKind { kSupervised, kDistillation };

/// Validated run records from CSV or JSON-lines. Parse failures carry the
/// one-based line number and the offending column.
struct RunTable {
  std::vector<fitting::SupervisedRun> supervised;
  std::vector<fitting::DistillRun> distill;
  std::size_t rows() const {
    return supervised.empty() ? distill.size() : supervised.size();
  }
};

RunTable load_runs(const std::string& path, RunKind kind);
RunTable parse_runs(std::istream& in, RunKind kind, const std::string& source);

void write_runs(const RunTable& table, RunKind kind, std::ostream& out);

/// Shortest decimal that round-trips to the same double; locale-free.
std::string format_double(double value);

using Cell = std::variant<double, std::string>;
using Row = std::vector<Cell>;

enum class GridFormat { kCsv, kJson };

/// Deterministic column order, shortest-round-trip numerics. All rows must
/// match the header width.
void emit_grid(const std::vector<std::string>& columns,
               const std::vector<Row>& rows, std::ostream& out,
               GridFormat format);
void emit_grid_file(const std::vector<std::string>& columns,
                    const std::vector<Row>& rows, const std::string& path,
                    GridFormat format);

/// Coefficients from a fit JSON (as written by the fit subcommand) or the
/// literal "table4".
laws::SupervisedCoeffs load_supervised_coeffs(const std::string& source);
laws::DistillCoeffs load_distill_coeffs(const std::string& source);

/// Tool configuration; any referenced file must exist at load time.
struct Config {
  std::string supervised_coeffs = "table4";
  std::string distill_coeffs = "table4";
  accounting::AspectProfile profile{};
  optimal::PlannerBounds bounds{};
  std::uint64_t seed = 0;

  static Config load(const std::string& path);
  static const char* env_var() { return "DSLAW_CONFIG"; }
};

}  // namespace dsl::io
