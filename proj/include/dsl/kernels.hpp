#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace dsl::kernels {

using Logits = Eigen::ArrayXd;

/// Temperature, loss mix and Z-loss weight for the student objective.
struct LossParams {
  double tau = 1.0;       // > 0
  double lambda = 1.0;    // in [0, 1]; 1 is pure distillation
  double lambda_z = 0.0;  // >= 0
  void validate() const;
};

/// Shift-invariant softmax; output sums to one.
Logits softmax(const Eigen::Ref<const Logits>& z);

/// -log softmax(z)[x].
double ntp_loss(Eigen::Index x, const Eigen::Ref<const Logits>& z);

/// Squared log-partition (log sum exp z)^2.
double z_loss(const Eigen::Ref<const Logits>& z);

/// -tau^2 sum_a softmax(z_t/tau)_a log softmax(z_s/tau)_a.
double kd_loss(const Eigen::Ref<const Logits>& z_t,
               const Eigen::Ref<const Logits>& z_s, double tau);

/// Gradient of kd_loss with respect to the student logits.
Logits kd_loss_grad_student(const Eigen::Ref<const Logits>& z_t,
                            const Eigen::Ref<const Logits>& z_s, double tau);

/// (1-lambda) ntp + lambda kd + lambda_z zloss.
double student_loss(Eigen::Index x, const Eigen::Ref<const Logits>& z_t,
                    const Eigen::Ref<const Logits>& z_s, const LossParams& p);

/// Reverse KL at temperature tau: H(q_s, p_t) - H(q_s), scaled by tau^2.
double reverse_kl_loss(const Eigen::Ref<const Logits>& z_t,
                       const Eigen::Ref<const Logits>& z_s, double tau);

struct Truncation {
  enum class Method { kTopK, kTopP } method = Method::kTopK;
  int k = 1;        // for top-k
  double p = 1.0;   // for top-p
  static Truncation top_k(int k) { return {Method::kTopK, k, 1.0}; }
  static Truncation top_p(double p) { return {Method::kTopP, 0, p}; }
};

/// Zeroes everything outside the retained set and renormalizes. Top-p keeps
/// the smallest prefix of the descending sort reaching cumulative mass >= p
/// (the crossing element is retained); ties break toward lower index.
Eigen::ArrayXd truncate(const Eigen::Ref<const Eigen::ArrayXd>& probs,
                        const Truncation& method);

struct CalibrationSample {
  double confidence = 0;  // in [0, 1]
  bool correct = false;
};

/// Expected calibration error over M uniform right-closed bins on [0, 1].
double ece(const std::vector<CalibrationSample>& samples, int bins = 21);

/// Distributional calibration gap: bins are over model-B confidences and
/// the summand compares mean confidences of A and B within each bin.
double ece_dist(const std::vector<std::pair<double, double>>& conf_a_b,
                int bins = 21);

/// Per-bin reliability data for plotting.
struct ReliabilityBin {
  double bin_lo = 0, bin_hi = 0;
  std::int64_t count = 0;
  double accuracy = 0;
  double confidence = 0;
};
std::vector<ReliabilityBin> reliability(
    const std::vector<CalibrationSample>& samples, int bins = 21);

}  // namespace dsl::kernels
