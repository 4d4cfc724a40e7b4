#include "cli_common.hpp"

#include <nlohmann/json.hpp>

#include "dsl/optimal.hpp"

namespace cli {

namespace {

using nlohmann::json;
namespace opt = dsl::optimal;

json plan_json(const opt::OptimalPlan& p) {
  json j;
  j["scenario"] = p.scenario.name;
  j["budget"] = p.budget;
  j["d_s"] = p.d_s;
  j["n_t"] = p.n_t;
  j["d_t"] = p.d_t;
  j["l_t"] = p.l_t;
  j["l_s"] = p.l_s;
  j["compute"] = {{"student_training", p.student_train_flops},
                  {"teacher_logits", p.teacher_logit_flops},
                  {"teacher_training", p.teacher_train_flops}};
  j["at_bound"] = {{"d_s", p.d_s_at_bound},
                   {"n_t", p.n_t_at_bound},
                   {"d_t", p.d_t_at_bound}};
  return j;
}

std::vector<opt::ComputeScenario> parse_scenarios(const std::string& spec) {
  if (spec == "all") return opt::ComputeScenario::all();
  std::vector<opt::ComputeScenario> out;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    const auto comma = spec.find(',', pos);
    out.push_back(opt::ComputeScenario::from_name(spec.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("no scenarios given");
  return out;
}

}  // namespace

void register_plan(CLI::App& app, GlobalOptions& global) {
  auto* cmd = app.add_subcommand(
      "plan", "compute-optimal distillation planning and comparisons");

  {
    struct Opts {
      double student_size = 1e9;
      double compute = 1e21;
      std::string scenario = "best-case";
      std::string out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = cmd->add_subcommand(
        "optimal", "optimal (D_S, N_T, D_T) for one student and budget");
    sub->add_option("--student-size", o->student_size,
                    "student non-embedding parameters")
        ->capture_default_str();
    sub->add_option("--compute", o->compute, "total FLOP budget")
        ->capture_default_str();
    sub->add_option("--scenario", o->scenario,
                    "best-case | teacher-inference | teacher-pretraining | "
                    "teacher-pretraining+inference")
        ->capture_default_str();
    sub->add_option("--out", o->out, "output path (default stdout)");
    sub->callback([o, &global] {
      const auto plan = opt::distill_optimal(
          o->student_size, o->compute,
          opt::ComputeScenario::from_name(o->scenario), global.distillation(),
          global.supervised(), global.flop_model(), global.bounds);
      write_text(plan_json(plan).dump(2) + "\n", o->out);
    });
  }

  {
    struct Opts {
      std::string student_sizes = "3e8,1e9,3e9,1e10";
      std::string compute_grid = "1e20:1e24:9";
      std::string scenarios = "all";
      std::string out;
      std::string format = "csv";
    };
    auto o = std::make_shared<Opts>();
    auto* sub = cmd->add_subcommand(
        "sweep", "plan grid over (student size, compute, scenario) rows");
    sub->add_option("--student-sizes", o->student_sizes, "comma list")
        ->capture_default_str();
    sub->add_option("--compute-grid", o->compute_grid,
                    "lo:hi:count (log-spaced)")
        ->capture_default_str();
    sub->add_option("--scenarios", o->scenarios, "'all' or a comma list")
        ->capture_default_str();
    sub->add_option("--out", o->out, "output path (default stdout)");
    sub->add_option("--format", o->format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->callback([o, &global] {
      const auto fm = global.flop_model();
      const auto sc = global.supervised();
      const auto dc = global.distillation();
      std::vector<dsl::io::Row> rows;
      for (double n_s : parse_double_list(o->student_sizes)) {
        for (double c : parse_axis(o->compute_grid)) {
          for (const auto& scen : parse_scenarios(o->scenarios)) {
            const auto p =
                opt::distill_optimal(n_s, c, scen, dc, sc, fm, global.bounds);
            rows.push_back({n_s, c, scen.name, p.d_s, p.n_t, p.d_t, p.l_t,
                            p.l_s, p.student_train_flops,
                            p.teacher_logit_flops, p.teacher_train_flops});
          }
        }
      }
      write_output({"n_s", "compute", "scenario", "d_s", "n_t", "d_t", "l_t",
                    "l_s", "student_training_flops", "teacher_logit_flops",
                    "teacher_training_flops"},
                   rows, o->out,
                   o->format == "json" ? dsl::io::GridFormat::kJson
                                       : dsl::io::GridFormat::kCsv);
    });
  }

  {
    struct Opts {
      std::string teachers;
      double student_size = 1e9;
      double tokens = 0;
      double compute = 0;
      std::string scenario = "teacher-inference";
      std::string out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = cmd->add_subcommand(
        "teacher-select",
        "pick the best teacher from a CSV with columns l_t,n_t");
    sub->add_option("--teachers", o->teachers, "teacher table")->required();
    sub->add_option("--student-size", o->student_size, "student size")
        ->capture_default_str();
    auto* tokens = sub->add_option("--tokens", o->tokens,
                                   "distillation token budget");
    auto* compute =
        sub->add_option("--compute", o->compute, "total compute budget");
    tokens->excludes(compute);
    sub->add_option("--scenario", o->scenario, "compute scenario")
        ->capture_default_str();
    sub->add_option("--out", o->out, "output path (default stdout)");
    sub->callback([o, tokens, compute, &global] {
      if (tokens->count() == 0 && compute->count() == 0)
        throw CLI::RequiredError("--tokens or --compute");
      std::ifstream in(o->teachers);
      if (!in)
        throw std::invalid_argument("cannot open teachers file: " +
                                    o->teachers);
      std::string header;
      std::getline(in, header);
      if (header.find("l_t") == std::string::npos ||
          header.find("n_t") == std::string::npos)
        throw std::invalid_argument("teachers file needs columns l_t,n_t");
      const bool lt_first = header.find("l_t") < header.find("n_t");
      std::vector<opt::TeacherOption> teachers;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto vals = parse_double_list(line);
        if (vals.size() < 2)
          throw std::invalid_argument("teacher rows need two columns");
        teachers.push_back(lt_first ? opt::TeacherOption{vals[0], vals[1]}
                                    : opt::TeacherOption{vals[1], vals[0]});
      }
      const bool use_tokens = tokens->count() > 0;
      const auto pick = opt::teacher_select(
          o->student_size, use_tokens ? o->tokens : o->compute, use_tokens,
          teachers, opt::ComputeScenario::from_name(o->scenario),
          global.distillation(), global.supervised(), global.flop_model());
      json j;
      j["index"] = pick.index;
      j["l_t"] = teachers[pick.index].l_t;
      j["n_t"] = teachers[pick.index].n_t;
      j["predicted_l_s"] = pick.l_s;
      j["d_s"] = pick.d_s;
      write_text(j.dump(2) + "\n", o->out);
    });
  }

  {
    struct Opts {
      double student_size = 1e9;
      std::string scenario = "best-case";
      double c_lo = 1e18, c_hi = 1e28;
      std::string out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = cmd->add_subcommand(
        "break-even",
        "smallest budget where supervised training of the same student "
        "matches optimal distillation");
    sub->add_option("--student-size", o->student_size, "student size")
        ->capture_default_str();
    sub->add_option("--scenario", o->scenario, "compute scenario")
        ->capture_default_str();
    sub->add_option("--c-lo", o->c_lo, "search range low end")
        ->capture_default_str();
    sub->add_option("--c-hi", o->c_hi, "search range high end")
        ->capture_default_str();
    sub->add_option("--out", o->out, "output path (default stdout)");
    sub->callback([o, &global] {
      const auto c = opt::break_even(
          o->student_size, opt::ComputeScenario::from_name(o->scenario),
          global.distillation(), global.supervised(), global.flop_model(),
          global.bounds, o->c_lo, o->c_hi);
      json j;
      j["student_size"] = o->student_size;
      j["scenario"] = o->scenario;
      if (c)
        j["break_even_compute"] = *c;
      else
        j["break_even_compute"] = nullptr;
      write_text(j.dump(2) + "\n", o->out);
    });
  }

  {
    struct Opts {
      double student_size = 1e9;
      double target_loss = 2.3;
      std::string scenario = "best-case";
      std::string out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = cmd->add_subcommand(
        "efficiency",
        "distillation resource use as a multiple of supervised learning");
    sub->add_option("--student-size", o->student_size, "student size")
        ->capture_default_str();
    sub->add_option("--target-loss", o->target_loss, "target cross-entropy")
        ->capture_default_str();
    sub->add_option("--scenario", o->scenario, "compute scenario")
        ->capture_default_str();
    sub->add_option("--out", o->out, "output path (default stdout)");
    sub->callback([o, &global] {
      const auto r = opt::efficiency_ratios(
          o->student_size, o->target_loss,
          opt::ComputeScenario::from_name(o->scenario), global.distillation(),
          global.supervised(), global.flop_model(), global.bounds);
      json j;
      j["student_size"] = o->student_size;
      j["target_loss"] = o->target_loss;
      j["scenario"] = o->scenario;
      j["compute_ratio"] = r.compute_ratio;
      j["data_ratio"] = r.data_ratio;
      j["distill_budget"] = r.distill_budget;
      j["supervised_budget"] = r.supervised_budget;
      write_text(j.dump(2) + "\n", o->out);
    });
  }
}

}  // namespace cli
