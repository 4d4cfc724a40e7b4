#include "dsl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dsl::kernels {

void LossParams::validate() const {
  if (!(tau > 0)) throw std::invalid_argument("LossParams: tau <= 0");
  if (!(lambda >= 0 && lambda <= 1))
    throw std::invalid_argument("LossParams: lambda outside [0,1]");
  if (!(lambda_z >= 0)) throw std::invalid_argument("LossParams: lambda_z < 0");
}

namespace {

void check_logits(const Eigen::Ref<const Logits>& z) {
  if (z.size() < 2) throw std::invalid_argument("logits: length < 2");
  if (!z.isFinite().all()) throw std::invalid_argument("logits: non-finite");
}

// log softmax, stable under any shift
Logits log_softmax(const Eigen::Ref<const Logits>& z) {
  const double m = z.maxCoeff();
  const Logits shifted = z - m;
  const double lse = std::log(shifted.exp().sum());
  return shifted - lse;
}

}  // namespace

Logits softmax(const Eigen::Ref<const Logits>& z) {
  check_logits(z);
  return log_softmax(z).exp();
}

double ntp_loss(Eigen::Index x, const Eigen::Ref<const Logits>& z) {
  check_logits(z);
  if (x < 0 || x >= z.size())
    throw std::out_of_range("ntp_loss: token index out of range");
  return -log_softmax(z)[x];
}

double z_loss(const Eigen::Ref<const Logits>& z) {
  check_logits(z);
  const double m = z.maxCoeff();
  const double log_partition = m + std::log((z - m).exp().sum());
  return log_partition * log_partition;
}

double kd_loss(const Eigen::Ref<const Logits>& z_t,
               const Eigen::Ref<const Logits>& z_s, double tau) {
  check_logits(z_t);
  check_logits(z_s);
  if (z_t.size() != z_s.size())
    throw std::invalid_argument("kd_loss: length mismatch");
  if (!(tau > 0)) throw std::invalid_argument("kd_loss: tau <= 0");
  const Logits p_t = softmax(z_t / tau);
  const Logits log_q = log_softmax(z_s / tau);
  return -tau * tau * (p_t * log_q).sum();
}

Logits kd_loss_grad_student(const Eigen::Ref<const Logits>& z_t,
                            const Eigen::Ref<const Logits>& z_s, double tau) {
  const Logits p_t = softmax(z_t / tau);
  const Logits q_s = softmax(z_s / tau);
  return tau * (q_s - p_t);
}

double student_loss(Eigen::Index x, const Eigen::Ref<const Logits>& z_t,
                    const Eigen::Ref<const Logits>& z_s, const LossParams& p) {
  p.validate();
  double total = p.lambda * kd_loss(z_t, z_s, p.tau);
  if (p.lambda < 1.0) total += (1.0 - p.lambda) * ntp_loss(x, z_s);
  if (p.lambda_z > 0.0) total += p.lambda_z * z_loss(z_s);
  return total;
}

double reverse_kl_loss(const Eigen::Ref<const Logits>& z_t,
                       const Eigen::Ref<const Logits>& z_s, double tau) {
  check_logits(z_t);
  check_logits(z_s);
  if (z_t.size() != z_s.size())
    throw std::invalid_argument("reverse_kl_loss: length mismatch");
  if (!(tau > 0)) throw std::invalid_argument("reverse_kl_loss: tau <= 0");
  const Logits q_s = softmax(z_s / tau);
  const Logits log_q = log_softmax(z_s / tau);
  const Logits log_p = log_softmax(z_t / tau);
  // H(q_s, p_t) - H(q_s) = sum q (log q - log p)
  return tau * tau * (q_s * (log_q - log_p)).sum();
}

Eigen::ArrayXd truncate(const Eigen::Ref<const Eigen::ArrayXd>& probs,
                        const Truncation& method) {
  const auto v = probs.size();
  if (v < 1) throw std::invalid_argument("truncate: empty distribution");
  if (!probs.isFinite().all() || (probs < 0).any())
    throw std::invalid_argument("truncate: not a distribution");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(v));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return probs[a] > probs[b];  // descending, ties keep lower index first
  });

  std::size_t keep = 0;
  if (method.method == Truncation::Method::kTopK) {
    if (method.k < 1 || method.k > v)
      throw std::invalid_argument("truncate: k outside [1, V]");
    keep = static_cast<std::size_t>(method.k);
  } else {
    if (!(method.p > 0 && method.p <= 1))
      throw std::invalid_argument("truncate: p outside (0, 1]");
    double cum = 0;
    while (keep < order.size()) {
      cum += probs[order[keep]];
      ++keep;
      if (cum >= method.p - 1e-15) break;  // crossing element retained
    }
  }

  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(v);
  double mass = 0;
  for (std::size_t i = 0; i < keep; ++i) mass += probs[order[i]];
  if (mass <= 0) throw std::invalid_argument("truncate: retained mass is zero");
  for (std::size_t i = 0; i < keep; ++i) out[order[i]] = probs[order[i]] / mass;
  return out;
}

namespace {

// Right-closed uniform bins on [0,1]; confidence 0 goes to the first bin.
// The epsilon keeps exact bin edges (0.8 * 5 = 4.0000000000000004) on the
// closed side.
int bin_of(double confidence, int bins) {
  if (confidence <= 0) return 0;
  const int b = static_cast<int>(std::ceil(confidence * bins - 1e-9)) - 1;
  return std::min(std::max(b, 0), bins - 1);
}

}  // namespace

double ece(const std::vector<CalibrationSample>& samples, int bins) {
  if (samples.empty()) throw std::invalid_argument("ece: no samples");
  if (bins < 1) throw std::invalid_argument("ece: bins < 1");
  std::vector<double> conf(bins, 0), acc(bins, 0);
  std::vector<std::int64_t> count(bins, 0);
  for (const auto& s : samples) {
    if (!(s.confidence >= 0 && s.confidence <= 1))
      throw std::invalid_argument("ece: confidence outside [0,1]");
    const int b = bin_of(s.confidence, bins);
    conf[b] += s.confidence;
    acc[b] += s.correct ? 1.0 : 0.0;
    ++count[b];
  }
  double total = 0;
  const double n = static_cast<double>(samples.size());
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double cb = static_cast<double>(count[b]);
    total += (cb / n) * std::abs(acc[b] / cb - conf[b] / cb);
  }
  return total;
}

double ece_dist(const std::vector<std::pair<double, double>>& conf_a_b,
                int bins) {
  if (conf_a_b.empty()) throw std::invalid_argument("ece_dist: no samples");
  if (bins < 1) throw std::invalid_argument("ece_dist: bins < 1");
  std::vector<double> sum_a(bins, 0), sum_b(bins, 0);
  std::vector<std::int64_t> count(bins, 0);
  for (const auto& [a, b_conf] : conf_a_b) {
    if (!(a >= 0 && a <= 1 && b_conf >= 0 && b_conf <= 1))
      throw std::invalid_argument("ece_dist: confidence outside [0,1]");
    const int b = bin_of(b_conf, bins);  // bins over model B
    sum_a[b] += a;
    sum_b[b] += b_conf;
    ++count[b];
  }
  double total = 0;
  const double n = static_cast<double>(conf_a_b.size());
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double cb = static_cast<double>(count[b]);
    total += (cb / n) * std::abs(sum_a[b] / cb - sum_b[b] / cb);
  }
  return total;
}

std::vector<ReliabilityBin> reliability(
    const std::vector<CalibrationSample>& samples, int bins) {
  if (samples.empty()) throw std::invalid_argument("reliability: no samples");
  std::vector<ReliabilityBin> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out[b].bin_lo = static_cast<double>(b) / bins;
    out[b].bin_hi = static_cast<double>(b + 1) / bins;
  }
  for (const auto& s : samples) {
    auto& bin = out[static_cast<std::size_t>(bin_of(s.confidence, bins))];
    bin.confidence += s.confidence;
    bin.accuracy += s.correct ? 1.0 : 0.0;
    ++bin.count;
  }
  for (auto& b : out) {
    if (b.count > 0) {
      b.confidence /= static_cast<double>(b.count);
      b.accuracy /= static_cast<double>(b.count);
    }
  }
  return out;
}

}  // namespace dsl::kernels
