#include "doctest.h"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dsl/io.hpp"
#include "dsl/synthetic.hpp"

using namespace dsl;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

// runs the built CLI and captures stdout+stderr
CommandResult run_cli(const std::string& args) {
  const std::string cmd = std::string(DSL_CLI_PATH) + " " + args + " 2>&1";
  CommandResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe))
    result.output.append(buf.data(), n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string fixture(const std::string& name) {
  return std::string(DSL_SOURCE_DIR) + "/data/" + name;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("load_runs parses a small supervised csv") {
  std::istringstream in("n,d,loss\n1e8,2e9,3.1\n2e8,4e9,2.9\n3e8,6e9,2.7\n");
  const auto table = io::parse_runs(in, io::RunKind::kSupervised, "mem");
  CHECK(table.supervised.size() == 3);
  CHECK(table.rows() == 3);
  CHECK(table.supervised[1].n == 2e8);
  CHECK(table.supervised[2].loss == 2.7);
}

TEST_CASE("load_runs names missing columns") {
  std::istringstream in("n,tokens,loss\n1e8,2e9,3.1\n");
  try {
    io::parse_runs(in, io::RunKind::kSupervised, "mem");
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("'d'") != std::string::npos);
  }
}

TEST_CASE("load_runs reports offending line numbers") {
  std::istringstream in("n,d,loss\n1e8,2e9,3.1\n1e8,oops,3.1\n");
  try {
    io::parse_runs(in, io::RunKind::kSupervised, "runs.csv");
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("runs.csv:3") != std::string::npos);
    CHECK(msg.find("'d'") != std::string::npos);
  }
}

TEST_CASE("load_runs rejects non-finite and non-positive values") {
  std::istringstream nan_in("n,d,loss\n1e8,2e9,nan\n");
  CHECK_THROWS_AS(io::parse_runs(nan_in, io::RunKind::kSupervised, "mem"),
                  std::invalid_argument);
  std::istringstream inf_in("n,d,loss\n1e8,inf,2.4\n");
  CHECK_THROWS_AS(io::parse_runs(inf_in, io::RunKind::kSupervised, "mem"),
                  std::invalid_argument);
  std::istringstream neg_in("n,d,loss\n1e8,-2e9,2.4\n");
  CHECK_THROWS_AS(io::parse_runs(neg_in, io::RunKind::kSupervised, "mem"),
                  std::invalid_argument);
}

TEST_CASE("load_runs accepts json lines") {
  std::istringstream in(
      "{\"n_s\":1e8,\"d_s\":2e9,\"l_t\":2.2,\"l_s\":2.6,\"n_t\":1e9}\n"
      "{\"n_s\":2e8,\"d_s\":4e9,\"l_t\":2.2,\"l_s\":2.5}\n");
  const auto table = io::parse_runs(in, io::RunKind::kDistillation, "mem");
  CHECK(table.distill.size() == 2);
  CHECK(table.distill[0].n_t.has_value());
  CHECK_FALSE(table.distill[1].n_t.has_value());
}

TEST_CASE("distillation run table round-trips bit-identically") {
  io::RunTable table;
  table.distill = synthetic::distillation_design(
      laws::table4_distillation(), laws::table4_supervised(), 0.005, 20);
  CHECK(table.distill.size() == 697);

  std::ostringstream first;
  io::write_runs(table, io::RunKind::kDistillation, first);
  std::istringstream back(first.str());
  const auto reread = io::parse_runs(back, io::RunKind::kDistillation, "mem");
  REQUIRE(reread.distill.size() == table.distill.size());
  for (std::size_t i = 0; i < table.distill.size(); ++i) {
    CHECK(reread.distill[i].n_s == table.distill[i].n_s);
    CHECK(reread.distill[i].d_s == table.distill[i].d_s);
    CHECK(reread.distill[i].l_t == table.distill[i].l_t);
    CHECK(reread.distill[i].l_s == table.distill[i].l_s);
  }
  std::ostringstream second;
  io::write_runs(reread, io::RunKind::kDistillation, second);
  CHECK(first.str() == second.str());
}

TEST_CASE("format_double round-trips") {
  const auto parse = [](const std::string& s) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    REQUIRE(ec == std::errc());
    REQUIRE(ptr == s.data() + s.size());
    return v;
  };
  for (double v : {1.0, 0.1, 1e300, 4096.0, 2.3746922483534955,
                   123456789.123456789, 5e-324}) {
    CHECK(parse(io::format_double(v)) == v);
    CHECK(parse(io::format_double(-v)) == -v);
  }
}

TEST_CASE("emit_grid csv") {
  std::ostringstream out;
  io::emit_grid({"a", "b"}, {}, out, io::GridFormat::kCsv);
  CHECK(out.str() == "a,b\n");

  std::ostringstream grid;
  io::emit_grid({"x", "name"},
                {{1.5, std::string("first")}, {2.5, std::string("second")}},
                grid, io::GridFormat::kCsv);
  CHECK(grid.str() == "x,name\n1.5,first\n2.5,second\n");

  // re-emission is byte-identical
  std::ostringstream again;
  io::emit_grid({"x", "name"},
                {{1.5, std::string("first")}, {2.5, std::string("second")}},
                again, io::GridFormat::kCsv);
  CHECK(grid.str() == again.str());

  std::ostringstream sink;
  CHECK_THROWS_AS(
      io::emit_grid({"a"}, {{1.0, 2.0}}, sink, io::GridFormat::kCsv),
      std::invalid_argument);
}

TEST_CASE("emit_grid json") {
  std::ostringstream out;
  io::emit_grid({"v"}, {{42.0}}, out, io::GridFormat::kJson);
  CHECK(out.str().find("42") != std::string::npos);
  CHECK(out.str().find("\"v\"") != std::string::npos);
}

TEST_CASE("coefficient sources") {
  const auto sup = io::load_supervised_coeffs("table4");
  CHECK(sup.E == 1.220);
  const auto supf = io::load_supervised_coeffs(fixture("table4.json"));
  CHECK(supf.alpha == 0.408);
  const auto disf = io::load_distill_coeffs(fixture("table4.json"));
  CHECK(disf.c1 == 522.6);
  CHECK_THROWS_AS(io::load_supervised_coeffs("/nonexistent.json"),
                  std::invalid_argument);
}

TEST_CASE("config validates referenced files") {
  const auto path = temp_file("dsl_config_bad.json");
  {
    std::ofstream out(path);
    out << R"({"supervised_coeffs": "/definitely/not/here.json"})";
  }
  CHECK_THROWS_AS(io::Config::load(path.string()), std::invalid_argument);

  const auto good = temp_file("dsl_config_good.json");
  {
    std::ofstream out(good);
    out << R"({"seed": 7, "profile": {"rho_model": 64},
               "bounds": {"d_t_hi": 1e16}})";
  }
  const auto cfg = io::Config::load(good.string());
  CHECK(cfg.seed == 7);
  CHECK(cfg.profile.rho_model == 64);
  CHECK(cfg.bounds.d_t_hi == 1e16);
}

TEST_CASE("cli help and usage errors") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("definitely-not-a-subcommand").exit_code == 2);
  CHECK(run_cli("accounting table --format yaml").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);  // a subcommand is required
}

TEST_CASE("cli reports domain errors as exit 1") {
  // budget far below the minimum student training cost
  const auto r = run_cli(
      "plan optimal --student-size 1e9 --compute 1e10 --scenario best-case");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("cli invocations are deterministic") {
  const auto a = run_cli("accounting table --sizes table7");
  const auto b = run_cli("accounting table --sizes table7");
  CHECK(a.exit_code == 0);
  CHECK(a.output == b.output);

  const auto k1 = run_cli(
      "capacity-gap kernel --n 50 --coeffs random:200 "
      "--t 5 --d 4.5 --seed 9 --m-max 60");
  const auto k2 = run_cli(
      "capacity-gap kernel --n 50 --coeffs random:200 "
      "--t 5 --d 4.5 --seed 9 --m-max 60");
  CHECK(k1.exit_code == 0);
  CHECK(k1.output == k2.output);
}

TEST_CASE("cli end-to-end fit matches the golden fixture") {
  const auto out = temp_file("dsl_fit_e2e.json");
  const auto r = run_cli("fit supervised --runs " +
                         fixture("synthetic_supervised.csv") + " --out " +
                         out.string());
  REQUIRE(r.exit_code == 0);

  std::ifstream got_f(out), want_f(fixture("golden_supervised_fit.json"));
  REQUIRE(got_f.good());
  REQUIRE(want_f.good());
  nlohmann::json got, want;
  got_f >> got;
  want_f >> want;
  for (const auto& key : {"E", "A", "B", "alpha", "beta", "gamma"}) {
    const double g = got["coefficients"][key].get<double>();
    const double w = want["coefficients"][key].get<double>();
    CHECK(std::abs(g / w - 1) < 1e-6);
  }
  CHECK(got["used_runs"] == 73);
}

TEST_CASE("cli plan sweep emits one row per cell") {
  const auto r = run_cli(
      "plan sweep --student-sizes 1e9 --compute-grid 1e20:1e21:2 "
      "--scenarios best-case,teacher-inference");
  REQUIRE(r.exit_code == 0);
  int lines = 0;
  for (char c : r.output)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 2 * 2);  // header + |C| x |scenarios|
}

TEST_CASE("cli kernels and calibration round trip") {
  const auto logits = temp_file("dsl_logits.jsonl");
  {
    std::ofstream out(logits);
    out << R"({"z_t":[0.0,1.0,2.0],"z_s":[0.5,0.5,1.5],"x":2})" << "\n";
  }
  const auto kd = run_cli("kernels eval --op kd --logits " + logits.string());
  CHECK(kd.exit_code == 0);
  CHECK(kd.output.find("line,value") != std::string::npos);

  const auto samples = temp_file("dsl_samples.csv");
  {
    std::ofstream out(samples);
    out << "confidence,correct\n0.8,1\n0.8,0\n0.6,1\n0.6,1\n";
  }
  const auto ece = run_cli("calibration ece --samples " + samples.string() +
                           " --bins 5 --out /dev/null");
  CHECK(ece.exit_code == 0);
  CHECK(ece.output.find("0.35") == 0);
}
