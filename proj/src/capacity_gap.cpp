#include "dsl/capacity_gap.hpp"

#include <cmath>
#include <stdexcept>

#include "dsl/numkit.hpp"

namespace dsl::capacity_gap {

void KernelProblem::validate() const {
  if (alpha.size() == 0)
    throw std::invalid_argument("KernelProblem: empty coefficients");
  if (!(teacher_norm > 0) || !(student_norm > 0))
    throw std::invalid_argument("KernelProblem: non-positive norm budget");
  if (student_norm > teacher_norm)
    throw std::invalid_argument("KernelProblem: D > T");
}

KernelProblem KernelProblem::random_uniform(int count, double teacher_norm,
                                            double student_norm,
                                            std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("random_uniform: count < 1");
  numkit::Rng rng(seed);
  KernelProblem p;
  p.alpha.resize(count);
  for (int i = 0; i < count; ++i) p.alpha[i] = rng.uniform(-1.0, 1.0);
  p.teacher_norm = teacher_norm;
  p.student_norm = student_norm;
  p.validate();
  return p;
}

namespace {

void check_capacity(const KernelProblem& p, int m, const char* what) {
  if (m < 1 || m > p.alpha.size())
    throw std::out_of_range(std::string(what) + " capacity out of range");
}

double head_norm(const KernelProblem& p, int k) {
  return std::sqrt(p.alpha.head(k).square().sum());
}

double tail_sq(const KernelProblem& p, int k) {
  return p.alpha.tail(p.alpha.size() - k).square().sum();
}

}  // namespace

KernelSolution teacher_solution(const KernelProblem& p, int m) {
  p.validate();
  check_capacity(p, m, "teacher");
  const double head = head_norm(p, m);
  const double c = head <= p.teacher_norm ? 1.0 : p.teacher_norm / head;
  KernelSolution s;
  s.scale = c;
  s.error = std::sqrt((c - 1) * (c - 1) * head * head + tail_sq(p, m));
  return s;
}

KernelSolution student_solution(const KernelProblem& p, int m, int n) {
  p.validate();
  check_capacity(p, m, "teacher");
  check_capacity(p, n, "student");
  const double c = teacher_solution(p, m).scale;
  const int k = std::min(m, n);
  const double head_k = head_norm(p, k);
  // the boundary case C||alpha_1:k|| == D keeps Q = 1 (continuity)
  const double q =
      c * head_k <= p.student_norm ? 1.0 : p.student_norm / (c * head_k);
  KernelSolution s;
  s.scale = q * c;
  s.error =
      std::sqrt((q * c - 1) * (q * c - 1) * head_k * head_k + tail_sq(p, k));
  return s;
}

Eigen::ArrayXd u_shape_scan(const KernelProblem& p, int n,
                            const std::vector<int>& m_range) {
  for (std::size_t i = 1; i < m_range.size(); ++i)
    if (m_range[i] <= m_range[i - 1])
      throw std::invalid_argument("u_shape_scan: m_range not increasing");
  Eigen::ArrayXd errors(static_cast<Eigen::Index>(m_range.size()));
  for (std::size_t i = 0; i < m_range.size(); ++i)
    errors[static_cast<Eigen::Index>(i)] =
        student_solution(p, m_range[i], n).error;
  return errors;
}

int mapping_label(const std::vector<int>& vector, int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("mapping_label: classes < 1");
  if (static_cast<int>(vector.size()) != 2 * num_classes)
    throw std::invalid_argument("mapping_label: length != 2 * num_classes");

  int selector = -1;
  for (int i = 0; i < num_classes; ++i) {
    const int v = vector[static_cast<std::size_t>(num_classes + i)];
    if (v == 1) {
      if (selector >= 0)
        throw std::invalid_argument("mapping_label: one-hot half has two ones");
      selector = i;
    } else if (v != 0) {
      throw std::invalid_argument("mapping_label: one-hot half not in {0,1}");
    }
  }
  if (selector < 0)
    throw std::invalid_argument("mapping_label: one-hot half has no one");

  const int c = vector[static_cast<std::size_t>(selector)];
  if (c == 0) return selector;

  std::vector<int> matches;
  for (int i = 0; i < num_classes; ++i)
    if (vector[static_cast<std::size_t>(i)] == c && i != selector)
      matches.push_back(i);
  if (matches.empty())
    throw std::domain_error("mapping_label: no matching context value");
  if (matches.size() > 1)
    throw std::domain_error("mapping_label: ambiguous match");
  return matches.front();
}

std::vector<int> parse_mapping_input(const std::string& digits) {
  std::vector<int> out;
  out.reserve(digits.size());
  for (char ch : digits) {
    if (ch < '0' || ch > '9')
      throw std::invalid_argument("parse_mapping_input: non-digit character");
    out.push_back(ch - '0');
  }
  return out;
}

}  // namespace dsl::capacity_gap
