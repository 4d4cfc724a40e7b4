#include "dsl/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dsl::io {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_strict(const std::string& text, const std::string& source,
                    std::size_t line, const std::string& column) {
  const auto fail = [&](const char* why) {
    std::ostringstream msg;
    msg << source << ":" << line << ": column '" << column << "': " << why
        << " ('" << text << "')";
    throw std::invalid_argument(msg.str());
  };
  if (text.empty()) fail("empty value");
  double value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) fail("not a number");
  if (!std::isfinite(value)) fail("non-finite value");
  return value;
}

struct Header {
  std::vector<std::string> names;
  int find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }
  int require(const std::string& name, const std::string& source) const {
    const int i = find(name);
    if (i < 0)
      throw std::invalid_argument(source + ": missing required column '" +
                                  name + "'");
    return i;
  }
};

RunTable parse_csv(std::istream& in, RunKind kind, const std::string& source) {
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(source + ": empty file");
  Header header{split_csv_line(line)};

  RunTable table;
  if (kind == RunKind::kSupervised) {
    const int cn = header.require("n", source);
    const int cd = header.require("d", source);
    const int cl = header.require("loss", source);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      const auto cells = split_csv_line(line);
      if (cells.size() < header.names.size()) {
        std::ostringstream msg;
        msg << source << ":" << lineno << ": expected " << header.names.size()
            << " cells, got " << cells.size();
        throw std::invalid_argument(msg.str());
      }
      fitting::SupervisedRun r;
      r.n = parse_strict(cells[cn], source, lineno, "n");
      r.d = parse_strict(cells[cd], source, lineno, "d");
      r.loss = parse_strict(cells[cl], source, lineno, "loss");
      if (!(r.n > 0 && r.d > 0 && r.loss > 0)) {
        std::ostringstream msg;
        msg << source << ":" << lineno << ": non-positive run value";
        throw std::invalid_argument(msg.str());
      }
      table.supervised.push_back(r);
    }
  } else {
    const int cns = header.require("n_s", source);
    const int cds = header.require("d_s", source);
    const int clt = header.require("l_t", source);
    const int cls = header.require("l_s", source);
    const int cnt = header.find("n_t");
    const int cdt = header.find("d_t");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      const auto cells = split_csv_line(line);
      if (cells.size() < header.names.size()) {
        std::ostringstream msg;
        msg << source << ":" << lineno << ": expected " << header.names.size()
            << " cells, got " << cells.size();
        throw std::invalid_argument(msg.str());
      }
      fitting::DistillRun r;
      r.n_s = parse_strict(cells[cns], source, lineno, "n_s");
      r.d_s = parse_strict(cells[cds], source, lineno, "d_s");
      r.l_t = parse_strict(cells[clt], source, lineno, "l_t");
      r.l_s = parse_strict(cells[cls], source, lineno, "l_s");
      if (cnt >= 0 && !cells[cnt].empty())
        r.n_t = parse_strict(cells[cnt], source, lineno, "n_t");
      if (cdt >= 0 && !cells[cdt].empty())
        r.d_t = parse_strict(cells[cdt], source, lineno, "d_t");
      if (!(r.n_s > 0 && r.d_s > 0 && r.l_t > 0 && r.l_s > 0)) {
        std::ostringstream msg;
        msg << source << ":" << lineno << ": non-positive run value";
        throw std::invalid_argument(msg.str());
      }
      table.distill.push_back(r);
    }
  }
  return table;
}

double json_number(const json& obj, const char* key, const std::string& source,
                   std::size_t line) {
  if (!obj.contains(key))
    throw std::invalid_argument(source + ":" + std::to_string(line) +
                                ": missing required column '" + key + "'");
  const double v = obj.at(key).get<double>();
  if (!std::isfinite(v))
    throw std::invalid_argument(source + ":" + std::to_string(line) +
                                ": non-finite value in '" + key + "'");
  return v;
}

RunTable parse_jsonl(std::istream& in, RunKind kind,
                     const std::string& source) {
  RunTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(source + ":" + std::to_string(lineno) +
                                  ": " + e.what());
    }
    if (kind == RunKind::kSupervised) {
      fitting::SupervisedRun r;
      r.n = json_number(obj, "n", source, lineno);
      r.d = json_number(obj, "d", source, lineno);
      r.loss = json_number(obj, "loss", source, lineno);
      table.supervised.push_back(r);
    } else {
      fitting::DistillRun r;
      r.n_s = json_number(obj, "n_s", source, lineno);
      r.d_s = json_number(obj, "d_s", source, lineno);
      r.l_t = json_number(obj, "l_t", source, lineno);
      r.l_s = json_number(obj, "l_s", source, lineno);
      if (obj.contains("n_t")) r.n_t = json_number(obj, "n_t", source, lineno);
      if (obj.contains("d_t")) r.d_t = json_number(obj, "d_t", source, lineno);
      table.distill.push_back(r);
    }
  }
  return table;
}

}  // namespace

RunTable parse_runs(std::istream& in, RunKind kind, const std::string& source) {
  // JSON-lines when the first non-space character is '{'
  const int c = in.peek();
  if (c == '{') return parse_jsonl(in, kind, source);
  return parse_csv(in, kind, source);
}

RunTable load_runs(const std::string& path, RunKind kind) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open runs file: " + path);
  return parse_runs(in, kind, path);
}

void write_runs(const RunTable& table, RunKind kind, std::ostream& out) {
  if (kind == RunKind::kSupervised) {
    out << "n,d,loss\n";
    for (const auto& r : table.supervised)
      out << format_double(r.n) << ',' << format_double(r.d) << ','
          << format_double(r.loss) << '\n';
  } else {
    out << "n_s,d_s,l_t,l_s,n_t,d_t\n";
    for (const auto& r : table.distill) {
      out << format_double(r.n_s) << ',' << format_double(r.d_s) << ','
          << format_double(r.l_t) << ',' << format_double(r.l_s) << ',';
      if (r.n_t) out << format_double(*r.n_t);
      out << ',';
      if (r.d_t) out << format_double(*r.d_t);
      out << '\n';
    }
  }
}

std::string format_double(double value) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void emit_grid(const std::vector<std::string>& columns,
               const std::vector<Row>& rows, std::ostream& out,
               GridFormat format) {
  for (const auto& row : rows)
    if (row.size() != columns.size())
      throw std::invalid_argument("emit_grid: ragged row");

  if (format == GridFormat::kCsv) {
    for (std::size_t i = 0; i < columns.size(); ++i)
      out << columns[i] << (i + 1 < columns.size() ? "," : "");
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (const double* d = std::get_if<double>(&row[i]))
          out << format_double(*d);
        else
          out << std::get<std::string>(row[i]);
        out << (i + 1 < row.size() ? "," : "");
      }
      out << '\n';
    }
    return;
  }

  json arr = json::array();
  for (const auto& row : rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (const double* d = std::get_if<double>(&row[i]))
        obj[columns[i]] = *d;
      else
        obj[columns[i]] = std::get<std::string>(row[i]);
    }
    arr.push_back(std::move(obj));
  }
  out << arr.dump(2) << '\n';
}

void emit_grid_file(const std::vector<std::string>& columns,
                    const std::vector<Row>& rows, const std::string& path,
                    GridFormat format) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  emit_grid(columns, rows, out, format);
}

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  json j;
  in >> j;
  return j;
}

const json& coefficients_node(const json& j) {
  return j.contains("coefficients") ? j.at("coefficients") : j;
}

}  // namespace

laws::SupervisedCoeffs load_supervised_coeffs(const std::string& source) {
  if (source == "table4") return laws::table4_supervised();
  const json c = coefficients_node(load_json_file(source));
  laws::SupervisedCoeffs out;
  out.E = c.at("E").get<double>();
  out.A = c.at("A").get<double>();
  out.B = c.at("B").get<double>();
  out.alpha = c.at("alpha").get<double>();
  out.beta = c.at("beta").get<double>();
  out.gamma = c.at("gamma").get<double>();
  out.validate();
  return out;
}

laws::DistillCoeffs load_distill_coeffs(const std::string& source) {
  if (source == "table4") return laws::table4_distillation();
  const json c = coefficients_node(load_json_file(source));
  laws::DistillCoeffs out;
  out.A_p = c.at("A_p").get<double>();
  out.B_p = c.at("B_p").get<double>();
  out.alpha_p = c.at("alpha_p").get<double>();
  out.beta_p = c.at("beta_p").get<double>();
  out.gamma_p = c.at("gamma_p").get<double>();
  out.c0 = c.at("c0").get<double>();
  out.c1 = c.at("c1").get<double>();
  out.f1 = c.at("f1").get<double>();
  out.d1 = c.at("d1").get<double>();
  out.validate();
  return out;
}

Config Config::load(const std::string& path) {
  const json j = load_json_file(path);
  Config cfg;
  if (j.contains("supervised_coeffs"))
    cfg.supervised_coeffs = j.at("supervised_coeffs").get<std::string>();
  if (j.contains("distill_coeffs"))
    cfg.distill_coeffs = j.at("distill_coeffs").get<std::string>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("profile")) {
    const auto& p = j.at("profile");
    if (p.contains("rho_model"))
      cfg.profile.rho_model = p.at("rho_model").get<double>();
    if (p.contains("rho_ffn")) cfg.profile.rho_ffn = p.at("rho_ffn").get<double>();
    if (p.contains("n_ffn")) cfg.profile.n_ffn = p.at("n_ffn").get<double>();
    if (p.contains("g_size")) cfg.profile.g_size = p.at("g_size").get<double>();
    cfg.profile.validate();
  }
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    if (b.contains("n_t_lo")) cfg.bounds.n_t_lo = b.at("n_t_lo").get<double>();
    if (b.contains("n_t_hi")) cfg.bounds.n_t_hi = b.at("n_t_hi").get<double>();
    if (b.contains("d_s_lo")) cfg.bounds.d_s_lo = b.at("d_s_lo").get<double>();
    if (b.contains("d_s_hi")) cfg.bounds.d_s_hi = b.at("d_s_hi").get<double>();
    if (b.contains("d_t_lo")) cfg.bounds.d_t_lo = b.at("d_t_lo").get<double>();
    if (b.contains("d_t_hi")) cfg.bounds.d_t_hi = b.at("d_t_hi").get<double>();
    cfg.bounds.validate();
  }
  for (const auto& key : {"supervised_coeffs", "distill_coeffs"}) {
    if (!j.contains(key)) continue;
    const auto value = j.at(key).get<std::string>();
    if (value != "table4" && !std::filesystem::exists(value))
      throw std::invalid_argument(std::string("config: referenced file '") +
                                  value + "' does not exist");
  }
  return cfg;
}

}  // namespace dsl::io
