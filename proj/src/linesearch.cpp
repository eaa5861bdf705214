#include "tdopt/linesearch.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace tdopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Minimizer of the Hermite cubic through (a, fa, da) and (b, fb, db).
std::optional<double> cubic_min(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return std::nullopt;
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::nullopt;
  const double t = b - (b - a) * (db + d2 - d1) / denom;
  if (!std::isfinite(t)) return std::nullopt;
  return t;
}

// Minimizer of the quadratic through (a, fa, da) and (b, fb).
std::optional<double> quad_min(double a, double fa, double da, double b, double fb) {
  const double h = b - a;
  const double c = (fb - fa - da * h) / (h * h);
  if (!(c > 0.0)) return std::nullopt;
  const double t = a - da / (2.0 * c);
  if (!std::isfinite(t)) return std::nullopt;
  return t;
}

struct Search {
  const Objective& f;
  const GradientFn& grad;
  const Eigen::VectorXd& x;
  const Eigen::VectorXd& p;
  const WolfeParams& params;
  double f0;
  double dphi0;

  int evals = 0;
  // Best strict-decrease step seen, preferring ones that satisfy the
  // sufficient-decrease inequality.
  double best_alpha = 0.0;
  double best_f = kNaN;
  bool best_armijo = false;

  bool armijo_ok(double alpha, double fa) const {
    return fa <= f0 + params.c1 * alpha * dphi0;
  }
  bool curvature_ok(double dphia) const { return std::abs(dphia) <= -params.c2 * dphi0; }

  bool budget_left() const { return evals < params.max_evals; }

  double phi(double alpha) {
    ++evals;
    return f.eval(x + alpha * p);
  }

  double dphi(double alpha) {
    ++evals;
    return p.dot(grad(x + alpha * p));
  }

  void note(double alpha, double fa) {
    if (!(fa < f0)) return;
    const bool armijo = armijo_ok(alpha, fa);
    if (std::isnan(best_f) || (armijo && !best_armijo) ||
        (armijo == best_armijo && fa < best_f)) {
      best_alpha = alpha;
      best_f = fa;
      best_armijo = armijo;
    }
  }

  LineSearchResult certified(double alpha, double fa, double dphia) const {
    if (!armijo_ok(alpha, fa) || !curvature_ok(dphia))
      throw std::logic_error("line search certified a step violating the Wolfe conditions");
    return {alpha, fa, evals, LineSearchStatus::Strong};
  }

  LineSearchResult finalize() const {
    if (std::isnan(best_f)) return {0.0, f0, evals, LineSearchStatus::NoDecrease};
    return {best_alpha, best_f, evals, LineSearchStatus::WeakDecrease};
  }

  LineSearchResult zoom(double lo, double flo, double dlo, double hi, double fhi, double dhi) {
    // Invariant: flo is the lowest value satisfying sufficient decrease, and
    // the interval between lo and hi brackets a strong-Wolfe point.
    while (budget_left()) {
      const double left = std::min(lo, hi);
      const double width = std::abs(hi - lo);
      if (width <= 1e-14 * std::max(1.0, std::abs(lo))) break;

      std::optional<double> trial;
      if (!std::isnan(dhi)) {
        trial = cubic_min(lo, flo, dlo, hi, fhi, dhi);
        if (trial && (*trial <= left + 0.2 * width || *trial >= left + 0.8 * width))
          trial.reset();
      }
      if (!trial) {
        trial = quad_min(lo, flo, dlo, hi, fhi);
        if (trial && (*trial <= left + 0.1 * width || *trial >= left + 0.9 * width))
          trial.reset();
      }
      const double a = trial ? *trial : lo + 0.5 * (hi - lo);

      const double fa = phi(a);
      note(a, fa);
      if (!armijo_ok(a, fa) || fa >= flo) {
        hi = a;
        fhi = fa;
        dhi = kNaN;
        continue;
      }
      if (!budget_left()) break;
      const double da = dphi(a);
      if (curvature_ok(da)) return certified(a, fa, da);
      if (da * (hi - lo) >= 0.0) {
        hi = lo;
        fhi = flo;
        dhi = dlo;
      }
      lo = a;
      flo = fa;
      dlo = da;
    }
    return finalize();
  }

  LineSearchResult run() {
    double alpha_prev = 0.0;
    double f_prev = f0;
    double dphi_prev = dphi0;
    double alpha = std::min(params.alpha_init, params.alpha_max);

    for (bool first = true; budget_left(); first = false) {
      const double fa = phi(alpha);
      note(alpha, fa);
      if (!armijo_ok(alpha, fa) || (!first && fa >= f_prev))
        return zoom(alpha_prev, f_prev, dphi_prev, alpha, fa, kNaN);
      if (!budget_left()) break;
      const double da = dphi(alpha);
      if (curvature_ok(da)) return certified(alpha, fa, da);
      if (da >= 0.0) return zoom(alpha, fa, da, alpha_prev, f_prev, dphi_prev);
      if (alpha >= params.alpha_max) break;
      alpha_prev = alpha;
      f_prev = fa;
      dphi_prev = da;
      alpha = std::min(2.0 * alpha, params.alpha_max);
    }
    return finalize();
  }
};

}  // namespace

LineSearchResult strong_wolfe(const Objective& f, const GradientFn& grad,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& p, double f0,
                              const Eigen::VectorXd& g0, const WolfeParams& params) {
  if (!(params.c1 > 0.0) || !(params.c1 < params.c2) || !(params.c2 < 1.0))
    throw std::invalid_argument("strong_wolfe: need 0 < c1 < c2 < 1");
  if (!(params.alpha_init > 0.0) || !(params.alpha_max > 0.0) || params.max_evals < 1)
    throw std::invalid_argument("strong_wolfe: bad step bounds or budget");
  const double dphi0 = p.dot(g0);
  if (!(dphi0 < 0.0))
    throw std::invalid_argument("strong_wolfe: p is not a descent direction");
  Search s{f, grad, x, p, params, f0, dphi0};
  return s.run();
}

LineSearchResult strong_wolfe(const Objective& f, const GradientFn& grad,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& p,
                              const WolfeParams& params) {
  const double f0 = f.eval(x);
  const Eigen::VectorXd g0 = grad(x);
  LineSearchResult r = strong_wolfe(f, grad, x, p, f0, g0, params);
  r.evals += 2;
  return r;
}

LineSearchResult armijo_backtrack(const Objective& f, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& p, double f0, double dphi0, double c1,
                                  double alpha_init, int max_evals) {
  if (!(dphi0 < 0.0))
    throw std::invalid_argument("armijo_backtrack: p is not a descent direction");
  double alpha = alpha_init;
  LineSearchResult r;
  r.f_new = f0;
  while (r.evals < max_evals) {
    ++r.evals;
    const double fa = f.eval(x + alpha * p);
    if (fa < f0 && fa <= f0 + c1 * alpha * dphi0) {
      r.alpha = alpha;
      r.f_new = fa;
      r.status = LineSearchStatus::WeakDecrease;
      return r;
    }
    alpha *= 0.5;
  }
  return r;
}

}  // namespace tdopt
