#include "cli_common.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "dsl/kernels.hpp"

namespace cli {

namespace {

using nlohmann::json;
namespace ker = dsl::kernels;

ker::Logits to_logits(const json& arr, const std::string& source,
                      std::size_t line, const char* key) {
  if (!arr.is_array())
    throw std::invalid_argument(source + ":" + std::to_string(line) + ": '" +
                                key + "' must be an array");
  ker::Logits z(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i)
    z[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return z;
}

}  // namespace

void register_kernels(CLI::App& app, GlobalOptions&) {
  auto* cmd = app.add_subcommand(
      "kernels", "reference distillation loss kernels over logit records");

  {
    struct Opts {
      std::string op = "kd";
      std::string logits;
      double tau = 1.0;
      double lambda = 1.0;
      double lambda_z = 0.0;
      std::string out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = cmd->add_subcommand(
        "eval",
        "evaluate a kernel per JSON-lines record; records carry z_s and, "
        "where needed, z_t and the target index x");
    sub->add_option("--op", o->op, "kd | ntp | zloss | reverse-kl | student")
        ->check(CLI::IsMember({"kd", "ntp", "zloss", "reverse-kl", "student"}))
        ->capture_default_str();
    sub->add_option("--logits", o->logits, "JSON-lines input")->required();
    sub->add_option("--tau", o->tau, "distillation temperature")
        ->capture_default_str();
    sub->add_option("--lambda", o->lambda, "distillation mix")
        ->capture_default_str();
    sub->add_option("--lambda-z", o->lambda_z, "Z-loss weight")
        ->capture_default_str();
    sub->add_option("--out", o->out, "output path (default stdout)");
    sub->callback([o] {
      std::ifstream in(o->logits);
      if (!in)
        throw std::invalid_argument("cannot open logits file: " + o->logits);
      std::vector<dsl::io::Row> rows;
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json rec = json::parse(line);
        double value = 0;
        if (o->op == "zloss") {
          value = ker::z_loss(to_logits(rec.at("z_s"), o->logits, lineno,
                                        "z_s"));
        } else if (o->op == "ntp") {
          value = ker::ntp_loss(
              rec.at("x").get<Eigen::Index>(),
              to_logits(rec.at("z_s"), o->logits, lineno, "z_s"));
        } else if (o->op == "kd") {
          value = ker::kd_loss(
              to_logits(rec.at("z_t"), o->logits, lineno, "z_t"),
              to_logits(rec.at("z_s"), o->logits, lineno, "z_s"), o->tau);
        } else if (o->op == "reverse-kl") {
          value = ker::reverse_kl_loss(
              to_logits(rec.at("z_t"), o->logits, lineno, "z_t"),
              to_logits(rec.at("z_s"), o->logits, lineno, "z_s"), o->tau);
        } else {
          ker::LossParams params{o->tau, o->lambda, o->lambda_z};
          value = ker::student_loss(
              rec.at("x").get<Eigen::Index>(),
              to_logits(rec.at("z_t"), o->logits, lineno, "z_t"),
              to_logits(rec.at("z_s"), o->logits, lineno, "z_s"), params);
        }
        rows.push_back({static_cast<double>(lineno), value});
      }
      write_output({"line", "value"}, rows, o->out, dsl::io::GridFormat::kCsv);
    });
  }

  {
    struct Opts {
      std::string probs;
      int top_k = 0;
      double top_p = 0;
      std::string out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = cmd->add_subcommand(
        "truncate", "top-k or top-p truncation of a probability vector");
    sub->add_option("--probs", o->probs, "comma list of probabilities")
        ->required();
    auto* k = sub->add_option("--top-k", o->top_k, "retain the k largest");
    auto* p =
        sub->add_option("--top-p", o->top_p, "retain cumulative mass >= p");
    k->excludes(p);
    sub->add_option("--out", o->out, "output path (default stdout)");
    sub->callback([o, k, p] {
      if (k->count() == 0 && p->count() == 0)
        throw CLI::RequiredError("--top-k or --top-p");
      const auto vals = parse_double_list(o->probs);
      Eigen::ArrayXd probs = Eigen::Map<const Eigen::ArrayXd>(
          vals.data(), static_cast<Eigen::Index>(vals.size()));
      const auto method = k->count() ? ker::Truncation::top_k(o->top_k)
                                     : ker::Truncation::top_p(o->top_p);
      const auto t = ker::truncate(probs, method);
      std::vector<dsl::io::Row> rows;
      for (Eigen::Index i = 0; i < t.size(); ++i)
        rows.push_back({static_cast<double>(i), probs[i], t[i]});
      write_output({"index", "p", "p_truncated"}, rows, o->out,
                   dsl::io::GridFormat::kCsv);
    });
  }

  auto* cal = app.add_subcommand(
      "calibration", "expected calibration error over sample tables");
  {
    struct Opts {
      std::string samples;
      int bins = 21;
      bool distributional = false;
      std::string out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = cal->add_subcommand(
        "ece",
        "ECE from a CSV with columns confidence,correct (or conf_a,conf_b "
        "with --distributional); prints the scalar and per-bin reliability "
        "rows");
    sub->add_option("--samples", o->samples, "samples CSV")->required();
    sub->add_option("--bins", o->bins, "uniform bins over [0,1]")
        ->capture_default_str();
    sub->add_flag("--distributional", o->distributional,
                  "compare two models' confidences instead of accuracy");
    sub->add_option("--out", o->out, "per-bin CSV path (default stdout)");
    sub->callback([o] {
      std::ifstream in(o->samples);
      if (!in)
        throw std::invalid_argument("cannot open samples file: " + o->samples);
      std::string line;
      std::getline(in, line);  // header
      if (o->distributional) {
        std::vector<std::pair<double, double>> pairs;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          const auto v = parse_double_list(line);
          if (v.size() < 2)
            throw std::invalid_argument("expected conf_a,conf_b rows");
          pairs.push_back({v[0], v[1]});
        }
        std::cout << dsl::io::format_double(ker::ece_dist(pairs, o->bins))
                  << "\n";
        return;
      }
      std::vector<ker::CalibrationSample> samples;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto v = parse_double_list(line);
        if (v.size() < 2)
          throw std::invalid_argument("expected confidence,correct rows");
        samples.push_back({v[0], v[1] != 0.0});
      }
      std::cout << dsl::io::format_double(ker::ece(samples, o->bins)) << "\n";
      const auto bins = ker::reliability(samples, o->bins);
      std::vector<dsl::io::Row> rows;
      for (const auto& b : bins) {
        rows.push_back({b.bin_lo, b.bin_hi, static_cast<double>(b.count),
                        b.accuracy, b.confidence});
      }
      write_output({"bin_lo", "bin_hi", "count", "accuracy", "confidence"},
                   rows, o->out, dsl::io::GridFormat::kCsv);
    });
  }
}

}  // namespace cli
