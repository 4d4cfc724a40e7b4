#include "cli_common.hpp"

#include "dsl/laws.hpp"

namespace cli {

namespace {

struct EvalOptions {
  std::string law = "supervised";
  std::string grid;
  std::string out;
  std::string format = "csv";
};

struct BestTeacherOptions {
  std::string n_s = "1e9";
  std::string d_s = "2e10";
  double lt_max = 8.0;
  std::string out;
  std::string format = "csv";
};

// grid specs look like "n=1e7:1e12:20,d=1e8:1e13:20"
std::vector<std::pair<std::string, std::vector<double>>> parse_grid(
    const std::string& spec) {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    const auto eq = spec.find('=', pos);
    if (eq == std::string::npos)
      throw std::invalid_argument("grid spec needs name=lo:hi:count pieces");
    const std::string name = spec.substr(pos, eq - pos);
    // the value may itself contain ':' but never ','
    const auto comma = spec.find(',', eq);
    const std::string value =
        spec.substr(eq + 1, comma == std::string::npos ? std::string::npos
                                                       : comma - eq - 1);
    axes.push_back({name, parse_axis(value)});
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return axes;
}

const std::vector<double>& axis_of(
    const std::vector<std::pair<std::string, std::vector<double>>>& axes,
    const std::string& name) {
  for (const auto& [n, v] : axes)
    if (n == name) return v;
  throw std::invalid_argument("grid spec is missing the '" + name + "' axis");
}

}  // namespace

void register_law(CLI::App& app, GlobalOptions& global) {
  auto* cmd = app.add_subcommand(
      "law", "evaluate the supervised and distillation cross-entropy laws");

  auto ev = std::make_shared<EvalOptions>();
  auto* eval = cmd->add_subcommand("eval", "evaluate a law over a grid");
  eval->add_option("--law", ev->law, "supervised or distill")
      ->check(CLI::IsMember({"supervised", "distill"}))
      ->capture_default_str();
  eval->add_option(
          "--grid", ev->grid,
          "axes, e.g. n=1e7:1e12:20,d=1e8:1e13:20 (distill: n_s, d_s, l_t); "
          "log-spaced, use lin: prefix for linear")
      ->required();
  eval->add_option("--out", ev->out, "output path (default stdout)");
  eval->add_option("--format", ev->format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  eval->callback([ev, &global] {
    const auto axes = parse_grid(ev->grid);
    const auto fmt = ev->format == "json" ? dsl::io::GridFormat::kJson
                                          : dsl::io::GridFormat::kCsv;
    std::vector<dsl::io::Row> rows;
    if (ev->law == "supervised") {
      const auto sc = global.supervised();
      for (double n : axis_of(axes, "n"))
        for (double d : axis_of(axes, "d"))
          rows.push_back({n, d, dsl::laws::supervised_loss(n, d, sc)});
      write_output({"n", "d", "loss"}, rows, ev->out, fmt);
    } else {
      const auto sc = global.supervised();
      const auto dc = global.distillation();
      for (double n_s : axis_of(axes, "n_s"))
        for (double d_s : axis_of(axes, "d_s"))
          for (double l_t : axis_of(axes, "l_t"))
            rows.push_back({n_s, d_s, l_t,
                            dsl::laws::distillation_loss(n_s, d_s, l_t, dc,
                                                         sc)});
      write_output({"n_s", "d_s", "l_t", "l_s"}, rows, ev->out, fmt);
    }
  });

  auto bt = std::make_shared<BestTeacherOptions>();
  auto* best = cmd->add_subcommand(
      "best-teacher",
      "teacher cross-entropy minimizing the student loss at each (N_S, D_S)");
  best->add_option("--n-s", bt->n_s, "student sizes (comma list)")
      ->capture_default_str();
  best->add_option("--d-s", bt->d_s, "distillation tokens (comma list)")
      ->capture_default_str();
  best->add_option("--lt-max", bt->lt_max, "upper end of the search interval")
      ->capture_default_str();
  best->add_option("--out", bt->out, "output path (default stdout)");
  best->add_option("--format", bt->format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  best->callback([bt, &global] {
    const auto sc = global.supervised();
    const auto dc = global.distillation();
    std::vector<dsl::io::Row> rows;
    for (double n_s : parse_double_list(bt->n_s)) {
      for (double d_s : parse_double_list(bt->d_s)) {
        const auto r =
            dsl::laws::best_teacher_loss(n_s, d_s, dc, sc, bt->lt_max);
        rows.push_back({n_s, d_s, r.l_t, r.l_s,
                        std::string(r.on_boundary ? "yes" : "no")});
      }
    }
    write_output({"n_s", "d_s", "l_t_star", "l_s_star", "boundary"}, rows,
                 bt->out,
                 bt->format == "json" ? dsl::io::GridFormat::kJson
                                      : dsl::io::GridFormat::kCsv);
  });
}

}  // namespace cli
