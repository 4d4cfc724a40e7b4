#include "cli_common.hpp"

#include <nlohmann/json.hpp>

#include "dsl/fitting.hpp"
#include "dsl/synthetic.hpp"

namespace cli {

namespace {

using nlohmann::json;

struct FitOptions {
  std::string runs;
  std::string out;
  std::optional<double> filter_loss;
  int bootstrap = 0;
  double delta = 1e-4;
  int max_starts = 4096;
  double ci_level = 0.9;
};

dsl::fitting::FitConfig make_config(const FitOptions& o,
                                    const GlobalOptions& global) {
  dsl::fitting::FitConfig cfg;
  cfg.huber_delta = o.delta;
  cfg.loss_threshold = o.filter_loss;
  cfg.max_starts = o.max_starts;
  cfg.ci_level = o.ci_level;
  cfg.seed = global.seed;
  if (o.bootstrap > 0) cfg.bootstrap_resamples = o.bootstrap;
  return cfg;
}

json config_echo(const dsl::fitting::FitConfig& cfg) {
  json j;
  j["huber_delta"] = cfg.huber_delta;
  if (cfg.loss_threshold) j["filter_loss"] = *cfg.loss_threshold;
  j["max_starts"] = cfg.max_starts;
  j["bootstrap_resamples"] = cfg.bootstrap_resamples;
  j["ci_level"] = cfg.ci_level;
  j["seed"] = cfg.seed;
  return j;
}

json result_json(const dsl::fitting::FitResult& fit,
                 const dsl::fitting::BootstrapIntervals* ci,
                 const dsl::fitting::FitConfig& cfg, const std::string& law) {
  json coeffs;
  if (law == "supervised") {
    const auto& c = fit.supervised;
    coeffs = {{"E", c.E},         {"A", c.A},       {"B", c.B},
              {"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}};
  } else {
    const auto& c = fit.distillation;
    coeffs = {{"A_p", c.A_p},         {"B_p", c.B_p},
              {"alpha_p", c.alpha_p}, {"beta_p", c.beta_p},
              {"gamma_p", c.gamma_p}, {"c0", c.c0},
              {"c1", c.c1},           {"f1", c.f1},
              {"d1", c.d1}};
  }
  json j;
  j["law"] = law;
  j["coefficients"] = coeffs;
  j["objective"] = fit.objective;
  j["a"] = fit.a;
  j["b"] = fit.b;
  j["used_runs"] = fit.used_runs;
  j["warnings"] = fit.warnings;
  j["config"] = config_echo(cfg);
  if (ci) {
    json intervals;
    for (std::size_t i = 0; i < ci->names.size(); ++i) {
      intervals[ci->names[i]] = {ci->lower[static_cast<Eigen::Index>(i)],
                                 ci->upper[static_cast<Eigen::Index>(i)]};
    }
    j["intervals"] = intervals;
  }
  return j;
}

struct SynthOptions {
  std::string law = "supervised";
  double noise = 0.005;
  std::string out;
};

}  // namespace

void register_fit(CLI::App& app, GlobalOptions& global) {
  auto* cmd = app.add_subcommand(
      "fit", "fit scaling-law coefficients from run records");

  for (const std::string law : {"supervised", "distill"}) {
    auto opts = std::make_shared<FitOptions>();
    auto* sub = cmd->add_subcommand(
        law, "fit the " + law + " law from a runs table (CSV or JSON-lines)");
    sub->add_option("--runs", opts->runs, "runs file")->required();
    sub->add_option("--out", opts->out, "fit JSON path (default stdout)");
    sub->add_option("--filter-loss", opts->filter_loss,
                    "keep only runs with loss >= threshold");
    sub->add_option("--bootstrap", opts->bootstrap,
                    "bootstrap resamples for 90% intervals (0 disables)")
        ->capture_default_str();
    sub->add_option("--delta", opts->delta, "Huber threshold")
        ->capture_default_str();
    sub->add_option("--max-starts", opts->max_starts,
                    "cap on the initialization grid")
        ->capture_default_str();
    sub->add_option("--ci-level", opts->ci_level, "interval coverage level")
        ->capture_default_str();
    sub->callback([opts, law, &global] {
      const auto cfg = make_config(*opts, global);
      json out;
      if (law == "supervised") {
        const auto table = dsl::io::load_runs(opts->runs,
                                              dsl::io::RunKind::kSupervised);
        const auto fit = dsl::fitting::fit_supervised(table.supervised, cfg);
        if (opts->bootstrap > 0) {
          const auto ci = dsl::fitting::fit_bootstrap(table.supervised, cfg);
          out = result_json(fit, &ci, cfg, law);
        } else {
          out = result_json(fit, nullptr, cfg, law);
        }
      } else {
        const auto table =
            dsl::io::load_runs(opts->runs, dsl::io::RunKind::kDistillation);
        const auto sc = global.supervised();
        const auto fit = dsl::fitting::fit_distillation(table.distill, cfg, sc);
        if (opts->bootstrap > 0) {
          const auto ci = dsl::fitting::fit_bootstrap(table.distill, cfg, sc);
          out = result_json(fit, &ci, cfg, law);
        } else {
          out = result_json(fit, nullptr, cfg, law);
        }
      }
      write_text(out.dump(2) + "\n", opts->out);
    });
  }

  auto synth = std::make_shared<SynthOptions>();
  auto* gen = cmd->add_subcommand(
      "synth",
      "generate the bundled synthetic run designs from the published "
      "coefficients (73 supervised runs or 697 distillation runs)");
  gen->add_option("--law", synth->law, "supervised or distill")
      ->check(CLI::IsMember({"supervised", "distill"}))
      ->capture_default_str();
  gen->add_option("--noise", synth->noise,
                  "multiplicative log-normal noise sigma")
      ->capture_default_str();
  gen->add_option("--out", synth->out, "output CSV (default stdout)");
  gen->callback([synth, &global] {
    const auto sc = global.supervised();
    dsl::io::RunTable table;
    dsl::io::RunKind kind;
    if (synth->law == "supervised") {
      table.supervised =
          dsl::synthetic::supervised_design(sc, synth->noise, global.seed);
      kind = dsl::io::RunKind::kSupervised;
    } else {
      table.distill = dsl::synthetic::distillation_design(
          global.distillation(), sc, synth->noise, global.seed);
      kind = dsl::io::RunKind::kDistillation;
    }
    std::ostringstream buf;
    dsl::io::write_runs(table, kind, buf);
    write_text(buf.str(), synth->out);
  });
}

}  // namespace cli
