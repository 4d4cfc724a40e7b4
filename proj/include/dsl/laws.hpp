#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

#include "dsl/numkit.hpp"

namespace dsl::laws {

/// L(N, D) = E + (A N^-alpha + B D^-beta)^gamma.
struct SupervisedCoeffs {
  double E = 0, A = 0, B = 0;
  double alpha = 0, beta = 0, gamma = 0;
  void validate() const;
};

/// L_S(N_S, D_S, L_T) = L_T + L_T^-c0 (1 + (L_T / (Ls~ d1))^(1/f1))^(-c1 f1)
///                          * (A' N_S^-alpha' + B' D_S^-beta')^gamma'
/// where Ls~ is the student's supervised cross-entropy.
struct DistillCoeffs {
  double A_p = 0, B_p = 0;
  double alpha_p = 0, beta_p = 0, gamma_p = 0;
  double c0 = 0, c1 = 0, f1 = 0, d1 = 0;
  void validate() const;
};

struct CoeffInterval {
  double point = 0, lo = 0, hi = 0;
  bool contains_point() const { return lo <= point && point <= hi; }
};

/// Published point estimates with 90% bootstrap intervals for both laws.
struct PaperCoeffs {
  SupervisedCoeffs supervised;
  DistillCoeffs distillation;
  CoeffInterval E, A, B, alpha, beta, gamma;
  CoeffInterval A_p, B_p, alpha_p, beta_p, gamma_p, c0, c1, f1, d1;
};

const PaperCoeffs& table4();
inline const SupervisedCoeffs& table4_supervised() { return table4().supervised; }
inline const DistillCoeffs& table4_distillation() { return table4().distillation; }

// ---- log-domain cores (numerically safe at extreme N, D) ----

template <typename S>
S log_supervised_loss(S log_n, S log_d, const SupervisedCoeffs& c) {
  const S mimic = numkit::lse<S>(std::log(S(c.A)) - S(c.alpha) * log_n,
                                 std::log(S(c.B)) - S(c.beta) * log_d);
  return numkit::lse<S>(std::log(S(c.E)), S(c.gamma) * mimic);
}

template <typename S>
S log_supervised_limit(S log_n, const SupervisedCoeffs& c) {
  return numkit::lse<S>(std::log(S(c.E)),
                        S(c.gamma) * (std::log(S(c.A)) - S(c.alpha) * log_n));
}

/// log L_S given log L_T and the log of the student supervised loss.
template <typename S>
S log_distillation_loss(S log_ns, S log_ds, S log_lt, S log_ls_tilde,
                        const DistillCoeffs& dc) {
  const S mimic = numkit::lse<S>(std::log(S(dc.A_p)) - S(dc.alpha_p) * log_ns,
                                 std::log(S(dc.B_p)) - S(dc.beta_p) * log_ds);
  const S q = (log_lt - log_ls_tilde - std::log(S(dc.d1))) / S(dc.f1);
  const S excess = -S(dc.c0) * log_lt -
                   S(dc.c1) * S(dc.f1) * numkit::lse<S>(S(0), q) +
                   S(dc.gamma_p) * mimic;
  return numkit::lse<S>(log_lt, excess);
}

/// Data-free variant: the B' term is dropped.
template <typename S>
S log_distillation_limit(S log_ns, S log_lt, S log_ls_tilde,
                         const DistillCoeffs& dc) {
  const S mimic = std::log(S(dc.A_p)) - S(dc.alpha_p) * log_ns;
  const S q = (log_lt - log_ls_tilde - std::log(S(dc.d1))) / S(dc.f1);
  const S excess = -S(dc.c0) * log_lt -
                   S(dc.c1) * S(dc.f1) * numkit::lse<S>(S(0), q) +
                   S(dc.gamma_p) * mimic;
  return numkit::lse<S>(log_lt, excess);
}

// ---- linear-domain cross-check path ----

template <typename S>
S supervised_loss_linear(S n, S d, const SupervisedCoeffs& c) {
  return S(c.E) + std::pow(S(c.A) * std::pow(n, -S(c.alpha)) +
                               S(c.B) * std::pow(d, -S(c.beta)),
                           S(c.gamma));
}

template <typename S>
S distillation_loss_linear(S ns, S ds, S lt, const DistillCoeffs& dc,
                           const SupervisedCoeffs& sc) {
  const S ls_tilde = supervised_loss_linear<S>(ns, ds, sc);
  const S bracket = std::pow(
      S(1) + std::pow(lt / (ls_tilde * S(dc.d1)), S(1) / S(dc.f1)),
      -S(dc.c1) * S(dc.f1));
  const S mimic = std::pow(S(dc.A_p) * std::pow(ns, -S(dc.alpha_p)) +
                               S(dc.B_p) * std::pow(ds, -S(dc.beta_p)),
                           S(dc.gamma_p));
  return lt + std::pow(lt, -S(dc.c0)) * bracket * mimic;
}

// ---- public operations ----

/// Cross-entropy in nats; throws std::domain_error for non-positive N or D.
double supervised_loss(double n_params, double d_tokens,
                       const SupervisedCoeffs& c);

/// Infinite-data limit E + (A N^-alpha)^gamma.
double supervised_limit(double n_params, const SupervisedCoeffs& c);

/// Student cross-entropy; throws std::domain_error on non-positive inputs.
double distillation_loss(double n_s, double d_s, double l_t,
                         const DistillCoeffs& dc, const SupervisedCoeffs& sc);

/// Student cross-entropy in the infinite-distillation-data limit.
double distillation_limit(double n_s, double l_t, const DistillCoeffs& dc,
                          const SupervisedCoeffs& sc);

struct BestTeacher {
  double l_t = 0;       // minimizing teacher cross-entropy
  double l_s = 0;       // achieved student cross-entropy
  bool on_boundary = false;
};

/// Interior minimizer of distillation_loss over L_T in
/// [sc.E + 1e-3, l_t_max]; flags when the minimizer lands on an endpoint.
BestTeacher best_teacher_loss(double n_s, double d_s, const DistillCoeffs& dc,
                              const SupervisedCoeffs& sc, double l_t_max = 8.0);

/// Same search applied to distillation_limit (infinite data).
BestTeacher best_teacher_limit(double n_s, const DistillCoeffs& dc,
                               const SupervisedCoeffs& sc, double l_t_max = 8.0);

// Grid-friendly overloads.
Eigen::ArrayXd supervised_loss(const Eigen::Ref<const Eigen::ArrayXd>& n,
                               const Eigen::Ref<const Eigen::ArrayXd>& d,
                               const SupervisedCoeffs& c);
Eigen::ArrayXd distillation_loss(const Eigen::Ref<const Eigen::ArrayXd>& n_s,
                                 const Eigen::Ref<const Eigen::ArrayXd>& d_s,
                                 const Eigen::Ref<const Eigen::ArrayXd>& l_t,
                                 const DistillCoeffs& dc,
                                 const SupervisedCoeffs& sc);

}  // namespace dsl::laws
