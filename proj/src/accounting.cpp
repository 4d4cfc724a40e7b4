#include "dsl/accounting.hpp"

#include <cmath>
#include <stdexcept>

namespace dsl::accounting {

void Architecture::validate() const {
  const std::int64_t fields[] = {n_layers, d_model,    d_head, n_heads,
                                 n_kv_heads, d_ffn,    n_ffn,  n_vocab,
                                 n_ctx};
  for (auto v : fields)
    if (v <= 0) throw std::invalid_argument("Architecture: non-positive field");
  if (d_model != n_heads * d_head)
    throw std::invalid_argument("Architecture: d_model != n_heads * d_head");
  if (n_heads % n_kv_heads != 0)
    throw std::invalid_argument("Architecture: n_heads % n_kv_heads != 0");
}

void AspectProfile::validate() const {
  if (!(rho_model > 0 && rho_ffn > 0 && n_ffn > 0 && g_size >= 1))
    throw std::invalid_argument("AspectProfile: non-positive field");
}

AspectProfile AspectProfile::of(const Architecture& arch) {
  arch.validate();
  AspectProfile p;
  p.rho_model = static_cast<double>(arch.d_model) / arch.n_layers;
  p.rho_ffn = static_cast<double>(arch.d_ffn) / arch.d_model;
  p.n_ffn = static_cast<double>(arch.n_ffn);
  p.g_size = static_cast<double>(arch.group_size());
  return p;
}

ParamBreakdown param_counts(const Architecture& arch) {
  arch.validate();
  const double dm = arch.d_model, dh = arch.d_head, dff = arch.d_ffn;
  const double nh = arch.n_heads, nkv = arch.n_kv_heads;

  ParamBreakdown b;
  b.embedding = static_cast<double>(arch.n_vocab) * dm;
  // QKV + output projection, plus pre-norm gain and QK-norm gains
  b.per_layer_attention = 2.0 * (nh + nkv) * dh * dm + 2.0 * dh + dm;
  b.per_layer_ffn = static_cast<double>(arch.n_ffn) * dm * dff + dm;
  b.output_norm = dm;
  b.n_nonembedding =
      arch.n_layers * (b.per_layer_attention + b.per_layer_ffn) + b.output_norm;
  b.n_total = b.n_nonembedding + b.embedding;  // output head is tied
  return b;
}

double flops_per_token_forward(const Architecture& arch) {
  arch.validate();
  const double dm = arch.d_model, dff = arch.d_ffn;
  const double nh = arch.n_heads, nctx = arch.n_ctx;
  const double g = static_cast<double>(arch.group_size());

  // causal attention: logits and values cost n_ctx/2 positions on average
  const double attention =
      (4.0 + 4.0 / g) * dm * dm + 2.0 * nctx * dm + 2.5 * nh * nctx;
  const double ffn = 2.0 * static_cast<double>(arch.n_ffn) * dm * dff;
  const double embedding = 2.0 * dm;
  const double logits = 2.0 * static_cast<double>(arch.n_vocab) * dm;
  return arch.n_layers * (attention + ffn) + embedding + logits;
}

double flops_backward(double forward) {
  if (forward < 0) throw std::invalid_argument("flops_backward: negative");
  return 2.0 * forward;
}

SigmaConstants sigma_constants(const AspectProfile& profile) {
  profile.validate();
  const double omega = profile.omega();
  SigmaConstants s;
  s.sigma1 = std::pow(profile.rho_model * omega * omega, -1.0 / 3.0);
  s.sigma2 = std::cbrt(profile.rho_model / omega);
  return s;
}

double flops_forward_from_N(double n_nonembedding, const AspectProfile& profile,
                            double n_ctx, double n_vocab) {
  if (!(n_nonembedding > 0))
    throw std::invalid_argument("flops_forward_from_N: N <= 0");
  const auto [sigma1, sigma2] = sigma_constants(profile);
  const double n13 = std::cbrt(n_nonembedding);
  return 2.0 * n_nonembedding *
         (1.0 + sigma1 * n_ctx / n13 + sigma2 * n_vocab / (n13 * n13));
}

LayerWidth arch_from_N(double n_nonembedding, const AspectProfile& profile,
                       std::int64_t d_head) {
  if (!(n_nonembedding > 0)) throw std::invalid_argument("arch_from_N: N <= 0");
  profile.validate();
  const double layers_real = std::cbrt(
      n_nonembedding / (profile.rho_model * profile.rho_model * profile.omega()));
  LayerWidth lw;
  lw.n_layers = std::max<std::int64_t>(1, std::llround(layers_real));
  const double width_real = profile.rho_model * static_cast<double>(lw.n_layers);
  lw.d_model =
      std::max<std::int64_t>(d_head, std::llround(width_real / d_head) * d_head);
  return lw;
}

Architecture build_arch(double n_nonembedding, const AspectProfile& profile,
                        std::int64_t n_vocab, std::int64_t n_ctx,
                        std::int64_t d_head, std::int64_t ffn_multiple) {
  const LayerWidth lw = arch_from_N(n_nonembedding, profile, d_head);
  Architecture a;
  a.n_layers = lw.n_layers;
  a.d_model = lw.d_model;
  a.d_head = d_head;
  a.n_heads = lw.d_model / d_head;
  a.n_kv_heads = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(a.n_heads / profile.g_size)));
  const double dff_real = profile.rho_ffn * static_cast<double>(lw.d_model);
  a.d_ffn = static_cast<std::int64_t>(
                std::ceil(dff_real / ffn_multiple - 1e-9)) *
            ffn_multiple;
  a.n_ffn = static_cast<std::int64_t>(std::llround(profile.n_ffn));
  a.n_vocab = n_vocab;
  a.n_ctx = n_ctx;
  return a;
}

const std::vector<GridRow>& reference_grid() {
  // The printed d_ffn for the 10B row (12672) does not reproduce the row's
  // own parameter and FLOP columns; 12800 does, and is used here.
  static const std::vector<GridRow> rows = {
      {"103M", 0.1028, 0.1363, 8, 1024, 2816, 0.3411, 0.2056, -39.74, 0.3398, -0.39},
      {"143M", 0.1434, 0.1811, 9, 1152, 3072, 0.4487, 0.2867, -36.10, 0.4471, -0.34},
      {"198M", 0.1983, 0.2402, 10, 1280, 3456, 0.587, 0.3965, -32.44, 0.5853, -0.29},
      {"266M", 0.2657, 0.3118, 11, 1408, 3840, 0.7524, 0.5314, -29.38, 0.7505, -0.25},
      {"340M", 0.3398, 0.3901, 12, 1536, 4096, 0.9333, 0.6796, -27.19, 0.9312, -0.22},
      {"435M", 0.4348, 0.4893, 13, 1664, 4480, 1.158, 0.8695, -24.91, 1.156, -0.19},
      {"546M", 0.546, 0.6047, 14, 1792, 4864, 1.417, 1.092, -22.96, 1.415, -0.17},
      {"664M", 0.6636, 0.7265, 15, 1920, 5120, 1.692, 1.327, -21.54, 1.689, -0.15},
      {"810M", 0.8096, 0.8767, 16, 2048, 5504, 2.025, 1.619, -20.03, 2.022, -0.14},
      {"975M", 0.9755, 1.047, 17, 2176, 5888, 2.4, 1.951, -18.69, 2.397, -0.12},
      {"1.15B", 1.147, 1.222, 18, 2304, 6144, 2.787, 2.293, -17.72, 2.784, -0.11},
      {"1.35B", 1.355, 1.434, 19, 2432, 6528, 3.25, 2.709, -16.65, 3.247, -0.10},
      {"1.59B", 1.586, 1.67, 20, 2560, 6912, 3.763, 3.172, -15.70, 3.759, -0.09},
      {"1.82B", 1.821, 1.909, 21, 2688, 7168, 4.284, 3.642, -14.99, 4.28, -0.09},
      {"2.1B", 2.102, 2.194, 22, 2816, 7552, 4.899, 4.203, -14.21, 4.895, -0.08},
      {"2.41B", 2.41, 2.506, 23, 2944, 7936, 5.571, 4.819, -13.49, 5.567, -0.07},
      {"2.72B", 2.718, 2.819, 24, 3072, 8192, 6.246, 5.436, -12.96, 6.241, -0.07},
      {"3.08B", 3.082, 3.187, 25, 3200, 8576, 7.034, 6.165, -12.36, 7.03, -0.06},
      {"3.48B", 3.478, 3.587, 26, 3328, 8960, 7.887, 6.956, -11.81, 7.883, -0.06},
      {"3.87B", 3.87, 3.983, 27, 3456, 9216, 8.736, 7.74, -11.40, 8.731, -0.05},
      {"4.33B", 4.329, 4.446, 28, 3584, 9600, 9.72, 8.658, -10.93, 9.715, -0.05},
      {"4.82B", 4.823, 4.944, 29, 3712, 9984, 10.78, 9.646, -10.49, 10.77, -0.05},
      {"5.31B", 5.309, 5.434, 30, 3840, 10240, 11.82, 10.62, -10.16, 11.81, -0.05},
      {"5.87B", 5.873, 6.003, 31, 3968, 10624, 13.02, 11.75, -9.78, 13.01, -0.04},
      {"6.48B", 6.476, 6.611, 32, 4096, 11008, 14.3, 12.95, -9.43, 14.29, -0.04},
      {"7.07B", 7.066, 7.204, 33, 4224, 11264, 15.56, 14.13, -9.16, 15.55, -0.04},
      {"7.75B", 7.747, 7.889, 34, 4352, 11648, 17.0, 15.49, -8.85, 16.99, -0.04},
      {"8.47B", 8.47, 8.617, 35, 4480, 12032, 18.52, 16.94, -8.55, 18.52, -0.03},
      {"9.17B", 9.173, 9.324, 36, 4608, 12288, 20.01, 18.35, -8.33, 20.01, -0.03},
      {"10B", 10.05, 10.2, 37, 4736, 12800, 21.85, 20.1, -8.02, 21.84, -0.03},
      {"10.8B", 10.84, 11.0, 38, 4864, 13056, 23.51, 21.67, -7.83, 23.5, -0.03},
      {"11.7B", 11.66, 11.83, 39, 4992, 13312, 25.26, 23.33, -7.64, 25.25, -0.03},
      {"12.6B", 12.61, 12.78, 40, 5120, 13696, 27.24, 25.22, -7.42, 27.23, -0.03},
  };
  return rows;
}

}  // namespace dsl::accounting
