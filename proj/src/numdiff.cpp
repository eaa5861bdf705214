#include "tdopt/numdiff.hpp"

#include <algorithm>
#include <cmath>

namespace tdopt {

namespace {

double checked_eval(const Objective& f, const Eigen::VectorXd& x) {
  const double v = f.eval(x);
  if (!std::isfinite(v)) throw NonFiniteError("objective evaluation is not finite");
  return v;
}

}  // namespace

double default_gradient_step(const Eigen::VectorXd& x) {
  const double scale = x.size() ? x.lpNorm<Eigen::Infinity>() : 0.0;
  return 1e-5 * std::max(1.0, scale);
}

double default_hv_step(const Eigen::VectorXd& p) { return 1e-5 / std::max(1.0, p.norm()); }

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("fd_gradient: eta must be positive");
  const Eigen::Index d = x.size();
  Eigen::VectorXd g(d);
  Eigen::VectorXd xt = x;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double xi = x[i];
    xt[i] = xi + 2.0 * eta;
    const double fp2 = checked_eval(f, xt);
    xt[i] = xi + eta;
    const double fp1 = checked_eval(f, xt);
    xt[i] = xi - eta;
    const double fm1 = checked_eval(f, xt);
    xt[i] = xi - 2.0 * eta;
    const double fm2 = checked_eval(f, xt);
    xt[i] = xi;
    g[i] = (2.0 * (fm2 - fp2) + 16.0 * (fp1 - fm1)) / (24.0 * eta);
  }
  return g;
}

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x) {
  return fd_gradient(f, x, default_gradient_step(x));
}

Eigen::VectorXd hessian_vector(const Objective& f, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& p, double eta_hv, double eta_grad,
                               const Eigen::VectorXd* grad_at_x) {
  if (!(eta_hv > 0.0)) throw std::invalid_argument("hessian_vector: eta must be positive");
  if (!p.allFinite()) throw std::invalid_argument("hessian_vector: direction must be finite");
  if (p.isZero(0.0)) return Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd g0 = grad_at_x ? *grad_at_x : fd_gradient(f, x, eta_grad);
  Eigen::VectorXd g1 = fd_gradient(f, x + eta_hv * p, eta_grad);
  return (g1 - g0) / eta_hv;
}

Eigen::VectorXd hessian_vector(const Objective& f, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& p) {
  return hessian_vector(f, x, p, default_hv_step(p), default_gradient_step(x));
}

}  // namespace tdopt
