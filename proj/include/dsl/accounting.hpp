#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dsl::accounting {

/// Decoder-transformer shape. Widths follow the pre-norm / RMSNorm /
/// gated-FFN family: tied embeddings, QK-norm gains, grouped-query
/// attention with group size n_heads / n_kv_heads.
struct Architecture {
  std::int64_t n_layers = 0;
  std::int64_t d_model = 0;
  std::int64_t d_head = 0;
  std::int64_t n_heads = 0;
  std::int64_t n_kv_heads = 0;
  std::int64_t d_ffn = 0;
  std::int64_t n_ffn = 3;  // number of feed-forward linears (3 when gated)
  std::int64_t n_vocab = 0;
  std::int64_t n_ctx = 0;

  std::int64_t group_size() const { return n_heads / n_kv_heads; }
  /// Throws std::invalid_argument unless all fields are positive,
  /// d_model == n_heads * d_head and n_heads % n_kv_heads == 0.
  void validate() const;
};

/// Fixed-aspect-ratio family descriptor: rho_model = d_model / n_layers,
/// rho_ffn = d_ffn / d_model, with omega = 2 + 2/g_size + n_ffn * rho_ffn.
struct AspectProfile {
  double rho_model = 128.0;
  double rho_ffn = 8.0 / 3.0;
  double n_ffn = 3.0;
  double g_size = 1.0;

  double omega() const { return 2.0 + 2.0 / g_size + n_ffn * rho_ffn; }
  void validate() const;

  static AspectProfile of(const Architecture& arch);
};

struct ParamBreakdown {
  double embedding = 0;
  double per_layer_attention = 0;
  double per_layer_ffn = 0;
  double output_norm = 0;
  double n_nonembedding = 0;
  double n_total = 0;
};

/// Exact parameter counts for the architecture family above.
ParamBreakdown param_counts(const Architecture& arch);

/// Exact forward FLOPs per token (causal attention, halved logits/values,
/// softmax at 2.5 FLOPs per score).
double flops_per_token_forward(const Architecture& arch);

/// Backward pass is twice the forward pass.
double flops_backward(double forward);

/// sigma_1 = (rho_model * omega^2)^(-1/3), sigma_2 = (rho_model/omega)^(1/3).
struct SigmaConstants {
  double sigma1 = 0;
  double sigma2 = 0;
};
SigmaConstants sigma_constants(const AspectProfile& profile);

/// Closed-form forward FLOPs per token from non-embedding parameters:
/// 2N (1 + sigma1 n_ctx / N^(1/3) + sigma2 n_vocab / N^(2/3)).
double flops_forward_from_N(double n_nonembedding, const AspectProfile& profile,
                            double n_ctx, double n_vocab);

/// Inverts N = n_layers^3 rho_model^2 omega for integer (n_layers, d_model):
/// n_layers rounds to the nearest integer, d_model = rho_model * n_layers
/// rounded to a multiple of d_head.
struct LayerWidth {
  std::int64_t n_layers = 0;
  std::int64_t d_model = 0;
};
LayerWidth arch_from_N(double n_nonembedding, const AspectProfile& profile,
                       std::int64_t d_head = 128);

/// Full architecture from a target non-embedding parameter count. d_ffn is
/// rho_ffn * d_model rounded up to a multiple of `ffn_multiple`.
Architecture build_arch(double n_nonembedding, const AspectProfile& profile,
                        std::int64_t n_vocab, std::int64_t n_ctx,
                        std::int64_t d_head = 128,
                        std::int64_t ffn_multiple = 128);

/// One published grid row: shapes plus the reported parameter/FLOP columns
/// (counts in units of 1e9, errors in percent).
struct GridRow {
  std::string name;
  double n_nonembedding_b;
  double n_total_b;
  std::int64_t n_layers;
  std::int64_t d_model;
  std::int64_t d_ffn;
  double c_fwd_b;
  double c_fwd_2n_b;
  double err_2n_pct;
  double c_fwd_sigma_b;
  double err_sigma_pct;
};

/// The 33-model fixed-aspect-ratio grid (rho_model = 128, d_head = 128,
/// MHA, n_ffn = 3, n_ctx = 4096, vocab 32768 for exact counts).
const std::vector<GridRow>& reference_grid();

}  // namespace dsl::accounting
