#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "tdopt/objective.hpp"

namespace tdopt {

// Raised when an objective evaluation feeding a difference stencil is NaN or
// infinite; callers treat it as divergence of the current iterate.
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Default perturbations. The gradient step scales with the iterate, the
// Hessian-vector step normalizes the move along the direction.
double default_gradient_step(const Eigen::VectorXd& x);  // 1e-5 * max(1, |x|_inf)
double default_hv_step(const Eigen::VectorXd& p);        // 1e-5 / max(1, |p|_2)

// Fourth-order central-difference gradient,
//   g_i = (f(x-2h e_i) - 8 f(x-h e_i) + 8 f(x+h e_i) - f(x+2h e_i)) / (12 h),
// exact for polynomials of degree <= 4. Costs 4*d evaluations.
Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x, double eta);
Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x);

// Hessian-vector product by gradient differencing,
//   H p ~ (grad f(x + eta_hv p) - grad f(x)) / eta_hv,
// both gradients from fd_gradient with step eta_grad. The dense Hessian is
// never formed. grad_at_x, when given, must equal fd_gradient(f, x, eta_grad)
// and saves its recomputation.
Eigen::VectorXd hessian_vector(const Objective& f, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& p, double eta_hv, double eta_grad,
                               const Eigen::VectorXd* grad_at_x = nullptr);
Eigen::VectorXd hessian_vector(const Objective& f, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& p);

}  // namespace tdopt
