#pragma once

#include <functional>

#include <Eigen/Dense>

#include "tdopt/objective.hpp"

namespace tdopt {

using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct WolfeParams {
  double c1 = 1e-4;       // sufficient-decrease slope fraction
  double c2 = 0.9;        // curvature bound; 0.1 for conjugate-gradient directions
  double alpha_init = 1.0;
  double alpha_max = 1e3;
  int max_evals = 60;     // total objective + gradient calls
};

enum class LineSearchStatus {
  Strong,        // sufficient decrease and strong curvature both certified
  WeakDecrease,  // strict decrease found, curvature not certified in budget
  NoDecrease,    // no step with f(x + a p) < f(x) found in budget
};

struct LineSearchResult {
  double alpha = 0.0;
  double f_new = 0.0;
  int evals = 0;
  LineSearchStatus status = LineSearchStatus::NoDecrease;
};

// Bracket-then-zoom search for a step satisfying
//   (i)   f(x + a p) <= f(x) + c1 a p.g(x)
//   (iii) |p.g(x + a p)| <= c2 |p.g(x)|
// using cubic/quadratic interpolation inside the zoom. f0 and g0 must be
// f(x) and grad(x); result.evals counts only new oracle calls. Requires
// p.g0 < 0 and throws std::invalid_argument otherwise. A Strong result is
// re-verified against both inequalities before return.
LineSearchResult strong_wolfe(const Objective& f, const GradientFn& grad,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& p, double f0,
                              const Eigen::VectorXd& g0, const WolfeParams& params);

// Convenience overload that evaluates f0 and g0 itself (2 extra evals).
LineSearchResult strong_wolfe(const Objective& f, const GradientFn& grad,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                              const WolfeParams& params);

// Halving backtrack accepting the first step with the sufficient-decrease
// inequality; last-resort fallback when the Wolfe search fails.
LineSearchResult armijo_backtrack(const Objective& f, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& p, double f0, double dphi0, double c1,
                                  double alpha_init, int max_evals);

}  // namespace tdopt
