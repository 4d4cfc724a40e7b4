#include "cli_common.hpp"

#include "dsl/accounting.hpp"

namespace cli {

namespace acc = dsl::accounting;

namespace {

struct TableOptions {
  std::string sizes = "table7";
  std::int64_t d_head = 128;
  std::string out;
  std::string format = "csv";
};

dsl::io::Row table_row(const std::string& name, const acc::Architecture& a) {
  const auto counts = acc::param_counts(a);
  const double exact = acc::flops_per_token_forward(a);
  const auto profile = acc::AspectProfile::of(a);
  const double approx_2n = 2.0 * counts.n_nonembedding;
  const double approx_sigma = acc::flops_forward_from_N(
      counts.n_nonembedding, profile, static_cast<double>(a.n_ctx),
      static_cast<double>(a.n_vocab));
  return {name,
          counts.n_nonembedding,
          counts.n_total,
          static_cast<double>(a.n_layers),
          static_cast<double>(a.d_model),
          static_cast<double>(a.d_ffn),
          exact,
          approx_2n,
          approx_sigma,
          100.0 * (approx_2n / exact - 1.0),
          100.0 * (approx_sigma / exact - 1.0)};
}

}  // namespace

void register_accounting(CLI::App& app, GlobalOptions& global) {
  auto* cmd = app.add_subcommand(
      "accounting", "parameter and FLOP counting for the model family");
  auto opts = std::make_shared<TableOptions>();

  auto* table = cmd->add_subcommand(
      "table",
      "emit a CSV of parameter counts and forward FLOPs per token, either "
      "for the published 33-model grid (--sizes table7) or for a list of "
      "non-embedding parameter targets");
  table->add_option("--sizes", opts->sizes,
                    "'table7' or a comma list of non-embedding param counts")
      ->capture_default_str();
  table->add_option("--d-head", opts->d_head, "attention head width")
      ->capture_default_str();
  table->add_option("--out", opts->out, "output path (default stdout)");
  table->add_option("--format", opts->format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  table->callback([opts, &global] {
    const std::vector<std::string> columns = {
        "name",   "n_nonembedding",    "n_total",
        "n_layers", "d_model",         "d_ff",
        "c_fwd",  "c_fwd_approx_2n",   "c_fwd_approx_sigma",
        "err_2n_pct", "err_sigma_pct"};
    std::vector<dsl::io::Row> rows;

    if (opts->sizes == "table7") {
      for (const auto& ref : acc::reference_grid()) {
        acc::Architecture a;
        a.n_layers = ref.n_layers;
        a.d_model = ref.d_model;
        a.d_head = opts->d_head;
        a.n_heads = ref.d_model / opts->d_head;
        a.n_kv_heads = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(a.n_heads / global.profile.g_size));
        a.d_ffn = ref.d_ffn;
        a.n_ffn = static_cast<std::int64_t>(global.profile.n_ffn);
        a.n_vocab = static_cast<std::int64_t>(global.n_vocab);
        a.n_ctx = static_cast<std::int64_t>(global.n_ctx);
        rows.push_back(table_row(ref.name, a));
      }
    } else {
      for (double n : parse_double_list(opts->sizes)) {
        const auto a = acc::build_arch(
            n, global.profile, static_cast<std::int64_t>(global.n_vocab),
            static_cast<std::int64_t>(global.n_ctx), opts->d_head);
        rows.push_back(table_row("N=" + dsl::io::format_double(n), a));
      }
    }
    write_output(columns, rows, opts->out,
                 opts->format == "json" ? dsl::io::GridFormat::kJson
                                        : dsl::io::GridFormat::kCsv);
  });
}

}  // namespace cli
