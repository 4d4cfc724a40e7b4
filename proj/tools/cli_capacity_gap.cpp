#include "cli_common.hpp"

#include <fstream>

#include "dsl/capacity_gap.hpp"

namespace cli {

namespace cg = dsl::capacity_gap;

void register_capacity_gap(CLI::App& app, GlobalOptions& global) {
  auto* cmd = app.add_subcommand(
      "capacity-gap",
      "closed-form kernel-regression capacity-gap lab and mapping labels");

  {
    struct Opts {
      std::string n = "50,100,200,400";
      std::string coeffs = "random:1000";
      double t = 5.0;
      double d = 4.5;
      int m_max = 0;  // 0 means the full coefficient count
      std::string out;
      std::string format = "csv";
    };
    auto o = std::make_shared<Opts>();
    auto* sub = cmd->add_subcommand(
        "kernel",
        "teacher/student errors over teacher capacity m for each student "
        "capacity n");
    sub->add_option("--n", o->n, "student capacities (comma list)")
        ->capture_default_str();
    sub->add_option("--coeffs", o->coeffs,
                    "random:<count> (uniform in [-1,1]) or a comma list")
        ->capture_default_str();
    sub->add_option("--t", o->t, "teacher norm budget")->capture_default_str();
    sub->add_option("--d", o->d, "student norm budget")->capture_default_str();
    sub->add_option("--m-max", o->m_max, "largest teacher capacity to scan");
    sub->add_option("--out", o->out, "output path (default stdout)");
    sub->add_option("--format", o->format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->callback([o, &global] {
      cg::KernelProblem problem;
      if (o->coeffs.rfind("random:", 0) == 0) {
        const int count = std::stoi(o->coeffs.substr(7));
        problem =
            cg::KernelProblem::random_uniform(count, o->t, o->d, global.seed);
      } else {
        const auto vals = parse_double_list(o->coeffs);
        problem.alpha = Eigen::Map<const Eigen::ArrayXd>(
            vals.data(), static_cast<Eigen::Index>(vals.size()));
        problem.teacher_norm = o->t;
        problem.student_norm = o->d;
        problem.validate();
      }
      const int m_max = o->m_max > 0
                            ? o->m_max
                            : static_cast<int>(problem.alpha.size());
      std::vector<dsl::io::Row> rows;
      for (double n_real : parse_double_list(o->n)) {
        const int n = static_cast<int>(n_real);
        for (int m = 1; m <= m_max; ++m) {
          rows.push_back({static_cast<double>(m), static_cast<double>(n),
                          cg::student_solution(problem, m, n).error,
                          cg::teacher_solution(problem, m).error});
        }
      }
      write_output({"m", "n", "student_error", "teacher_error"}, rows, o->out,
                   o->format == "json" ? dsl::io::GridFormat::kJson
                                       : dsl::io::GridFormat::kCsv);
    });
  }

  {
    struct Opts {
      std::string input;
      int classes = 8;
      std::string out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = cmd->add_subcommand(
        "label",
        "label mapping-problem samples (one digit string per line)");
    sub->add_option("--input", o->input, "input file")->required();
    sub->add_option("--classes", o->classes, "number of classes")
        ->capture_default_str();
    sub->add_option("--out", o->out, "output path (default stdout)");
    sub->callback([o] {
      std::ifstream in(o->input);
      if (!in)
        throw std::invalid_argument("cannot open input file: " + o->input);
      std::vector<dsl::io::Row> rows;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const int label =
            cg::mapping_label(cg::parse_mapping_input(line), o->classes);
        rows.push_back({line, static_cast<double>(label)});
      }
      write_output({"input", "label"}, rows, o->out,
                   dsl::io::GridFormat::kCsv);
    });
  }
}

}  // namespace cli
