#include <cstdlib>
#include <exception>
#include <iostream>

#include "cli_common.hpp"
#include "dsl/numkit.hpp"

namespace cli {

void write_output(const std::vector<std::string>& columns,
                  const std::vector<dsl::io::Row>& rows,
                  const std::string& out_path, dsl::io::GridFormat format) {
  if (out_path.empty()) {
    dsl::io::emit_grid(columns, rows, std::cout, format);
  } else {
    dsl::io::emit_grid_file(columns, rows, out_path, format);
  }
}

void write_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot open output file: " + out_path);
  out << text;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const auto comma = csv.find(',', pos);
    const auto piece = csv.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      out.push_back(std::stod(piece));
    } catch (const std::exception&) {
      throw std::invalid_argument("not a number in list: '" + piece + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty numeric list");
  return out;
}

std::vector<double> parse_axis(const std::string& spec) {
  bool linear = false;
  std::string body = spec;
  if (body.rfind("lin:", 0) == 0) {
    linear = true;
    body = body.substr(4);
  }
  const auto parts = parse_double_list([&] {
    std::string s = body;
    for (auto& ch : s)
      if (ch == ':') ch = ',';
    return s;
  }());
  if (parts.size() != 3)
    throw std::invalid_argument("axis spec must be lo:hi:count: '" + spec +
                                "'");
  const double lo = parts[0], hi = parts[1];
  const int count = static_cast<int>(parts[2]);
  if (count < 1 || (!linear && !(lo > 0)))
    throw std::invalid_argument("bad axis spec: '" + spec + "'");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out.push_back(linear ? lo + (hi - lo) * t : lo * std::pow(hi / lo, t));
  }
  return out;
}

}  // namespace cli

namespace {

void apply_config_defaults(cli::GlobalOptions& global,
                           const std::string& explicit_path) {
  std::string path = explicit_path;
  if (path.empty()) {
    if (const char* env = std::getenv(dsl::io::Config::env_var())) path = env;
  }
  if (path.empty()) return;
  const auto cfg = dsl::io::Config::load(path);
  global.coeffs = cfg.supervised_coeffs;
  global.distill_coeffs = cfg.distill_coeffs;
  global.profile = cfg.profile;
  global.bounds = cfg.bounds;
  global.seed = cfg.seed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Scaling-law toolkit for compute-optimal knowledge distillation:\n"
      "transformer parameter/FLOP accounting, supervised and distillation\n"
      "cross-entropy laws, robust coefficient fitting, compute-optimal\n"
      "planning, kernel-regression capacity-gap analysis and reference\n"
      "distillation/calibration kernels."};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_help_all_flag("--help-all", "print help for every subcommand");

  cli::GlobalOptions global;
  std::string config_path;

  // the config file only supplies defaults, so it is applied before parsing
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  }
  try {
    apply_config_defaults(global, config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  app.add_option("--config", config_path,
                 "JSON config supplying defaults (also " +
                     std::string(dsl::io::Config::env_var()) + ")");
  app.add_option("--seed", global.seed, "global random seed")
      ->capture_default_str();
  app.add_option("--coeffs", global.coeffs,
                 "supervised coefficients: table4 or a fit JSON")
      ->capture_default_str();
  app.add_option("--distill-coeffs", global.distill_coeffs,
                 "distillation coefficients: table4 or a fit JSON")
      ->capture_default_str();
  app.add_option("--rho-model", global.profile.rho_model,
                 "aspect ratio d_model/n_layers")
      ->capture_default_str();
  app.add_option("--rho-ffn", global.profile.rho_ffn,
                 "feed-forward ratio d_ffn/d_model")
      ->capture_default_str();
  app.add_option("--n-ffn", global.profile.n_ffn,
                 "number of feed-forward linears")
      ->capture_default_str();
  app.add_option("--g-size", global.profile.g_size,
                 "grouped-query attention group size")
      ->capture_default_str();
  app.add_option("--n-ctx", global.n_ctx, "context length in tokens")
      ->capture_default_str();
  app.add_option("--vocab", global.n_vocab, "vocabulary size")
      ->capture_default_str();

  cli::register_accounting(app, global);
  cli::register_law(app, global);
  cli::register_fit(app, global);
  cli::register_plan(app, global);
  cli::register_capacity_gap(app, global);
  cli::register_kernels(app, global);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
