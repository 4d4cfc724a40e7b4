#include "dsl/laws.hpp"

#include <cmath>

namespace dsl::laws {

void SupervisedCoeffs::validate() const {
  const double v[] = {E, A, B, alpha, beta, gamma};
  for (double x : v)
    if (!(x > 0)) throw std::invalid_argument("SupervisedCoeffs: non-positive");
}

void DistillCoeffs::validate() const {
  const double v[] = {A_p, B_p, alpha_p, beta_p, gamma_p, c0, c1, f1, d1};
  for (double x : v)
    if (!(x > 0)) throw std::invalid_argument("DistillCoeffs: non-positive");
}

const PaperCoeffs& table4() {
  static const PaperCoeffs t = [] {
    PaperCoeffs p;
    p.supervised = {1.220, 3355.0, 18186.0, 0.408, 0.431, 0.452};
    p.distillation = {2243.0, 24181.0, 0.321, 0.637, 0.764,
                      2.549,  522.6,   0.090, 1.315};
    p.A = {3355, 3346, 3360};
    p.B = {18186, 18157, 18236};
    p.E = {1.220, 1.190, 1.247};
    p.alpha = {0.408, 0.405, 0.411};
    p.beta = {0.431, 0.428, 0.433};
    p.gamma = {0.452, 0.442, 0.461};
    p.A_p = {2243, 2227, 2255};
    p.B_p = {24181, 24084, 24266};
    p.alpha_p = {0.321, 0.319, 0.324};
    p.beta_p = {0.637, 0.634, 0.640};
    p.gamma_p = {0.764, 0.732, 0.788};
    p.c0 = {2.549, 2.425, 2.615};
    p.c1 = {522.6, 522.6, 522.6};
    p.f1 = {0.090, 0.088, 0.093};
    p.d1 = {1.315, 1.302, 1.327};
    return p;
  }();
  return t;
}

namespace {
void require_positive(double v, const char* what) {
  if (!(v > 0)) throw std::domain_error(std::string(what) + " must be positive");
}
}  // namespace

double supervised_loss(double n_params, double d_tokens,
                       const SupervisedCoeffs& c) {
  require_positive(n_params, "N");
  require_positive(d_tokens, "D");
  return std::exp(
      log_supervised_loss<double>(std::log(n_params), std::log(d_tokens), c));
}

double supervised_limit(double n_params, const SupervisedCoeffs& c) {
  require_positive(n_params, "N");
  return std::exp(log_supervised_limit<double>(std::log(n_params), c));
}

double distillation_loss(double n_s, double d_s, double l_t,
                         const DistillCoeffs& dc, const SupervisedCoeffs& sc) {
  require_positive(n_s, "N_S");
  require_positive(d_s, "D_S");
  require_positive(l_t, "L_T");
  const double log_ls_tilde =
      log_supervised_loss<double>(std::log(n_s), std::log(d_s), sc);
  return std::exp(log_distillation_loss<double>(
      std::log(n_s), std::log(d_s), std::log(l_t), log_ls_tilde, dc));
}

double distillation_limit(double n_s, double l_t, const DistillCoeffs& dc,
                          const SupervisedCoeffs& sc) {
  require_positive(n_s, "N_S");
  require_positive(l_t, "L_T");
  const double log_ls_tilde = log_supervised_limit<double>(std::log(n_s), sc);
  return std::exp(log_distillation_limit<double>(std::log(n_s), std::log(l_t),
                                                 log_ls_tilde, dc));
}

namespace {

BestTeacher to_best_teacher(const numkit::ScalarMin& m) {
  BestTeacher out;
  out.l_t = m.x;
  out.l_s = m.f;
  out.on_boundary = m.on_boundary;
  return out;
}

}  // namespace

BestTeacher best_teacher_loss(double n_s, double d_s, const DistillCoeffs& dc,
                              const SupervisedCoeffs& sc, double l_t_max) {
  require_positive(n_s, "N_S");
  require_positive(d_s, "D_S");
  const double lo = sc.E + 1e-3;
  return to_best_teacher(numkit::minimize_scalar(
      [&](double lt) { return distillation_loss(n_s, d_s, lt, dc, sc); }, lo,
      l_t_max));
}

BestTeacher best_teacher_limit(double n_s, const DistillCoeffs& dc,
                               const SupervisedCoeffs& sc, double l_t_max) {
  require_positive(n_s, "N_S");
  const double lo = sc.E + 1e-3;
  return to_best_teacher(numkit::minimize_scalar(
      [&](double lt) { return distillation_limit(n_s, lt, dc, sc); }, lo,
      l_t_max));
}

Eigen::ArrayXd supervised_loss(const Eigen::Ref<const Eigen::ArrayXd>& n,
                               const Eigen::Ref<const Eigen::ArrayXd>& d,
                               const SupervisedCoeffs& c) {
  if (n.size() != d.size())
    throw std::invalid_argument("supervised_loss: size mismatch");
  Eigen::ArrayXd out(n.size());
  for (Eigen::Index i = 0; i < n.size(); ++i)
    out[i] = supervised_loss(n[i], d[i], c);
  return out;
}

Eigen::ArrayXd distillation_loss(const Eigen::Ref<const Eigen::ArrayXd>& n_s,
                                 const Eigen::Ref<const Eigen::ArrayXd>& d_s,
                                 const Eigen::Ref<const Eigen::ArrayXd>& l_t,
                                 const DistillCoeffs& dc,
                                 const SupervisedCoeffs& sc) {
  if (n_s.size() != d_s.size() || n_s.size() != l_t.size())
    throw std::invalid_argument("distillation_loss: size mismatch");
  Eigen::ArrayXd out(n_s.size());
  for (Eigen::Index i = 0; i < n_s.size(); ++i)
    out[i] = distillation_loss(n_s[i], d_s[i], l_t[i], dc, sc);
  return out;
}

}  // namespace dsl::laws
