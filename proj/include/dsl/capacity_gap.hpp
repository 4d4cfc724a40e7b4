#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace dsl::capacity_gap {

/// Target function coefficients with teacher/student norm budgets. The
/// interesting regime is D <= T < ||alpha||.
struct KernelProblem {
  Eigen::ArrayXd alpha;  // target coefficients, non-empty
  double teacher_norm = 0;  // T
  double student_norm = 0;  // D

  void validate() const;
  double target_norm() const { return std::sqrt(alpha.square().sum()); }

  /// Coefficients drawn uniformly from [-1, 1].
  static KernelProblem random_uniform(int count, double teacher_norm,
                                      double student_norm, std::uint64_t seed);
};

struct KernelSolution {
  double scale = 0;  // C for the teacher, Q*C for the student
  double error = 0;  // Hilbert-space distance to the target
};

/// Optimal norm-constrained teacher over the first m basis functions:
/// C = min(1, T / ||alpha_1:m||), error from the rescaled head plus the
/// truncated tail.
KernelSolution teacher_solution(const KernelProblem& p, int m);

/// Optimal student distilled from the m-teacher over n basis functions;
/// k = min(m, n), Q = min(1, D / (C ||alpha_1:k||)). The returned scale is
/// the total coefficient multiplier Q*C.
KernelSolution student_solution(const KernelProblem& p, int m, int n);

/// Student errors over a range of teacher capacities at fixed n.
Eigen::ArrayXd u_shape_scan(const KernelProblem& p, int n,
                            const std::vector<int>& m_range);

/// Deterministic label for the mapping problem. The input has 2*num_classes
/// entries: the first half is the context, the second a one-hot selector.
/// When the selected context value is zero the label is the selector
/// position; otherwise it is the position of the matching context value
/// after removing the selector position itself. Throws
/// std::invalid_argument for malformed inputs and std::domain_error when
/// the match is missing or ambiguous.
int mapping_label(const std::vector<int>& vector, int num_classes);

/// Convenience parse of digit strings like "2020210001000000".
std::vector<int> parse_mapping_input(const std::string& digits);

}  // namespace dsl::capacity_gap
