#include "tdopt/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "tdopt/numdiff.hpp"

namespace tdopt {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

}  // namespace

const char* to_string(OptFamily f) {
  switch (f) {
    case OptFamily::VecHGrad: return "vechgrad";
    case OptFamily::Sgd: return "sgd";
    case OptFamily::Nag: return "nag";
    case OptFamily::Adam: return "adam";
    case OptFamily::RmsProp: return "rmsprop";
    case OptFamily::Saga: return "saga";
    case OptFamily::AdaGrad: return "adagrad";
    case OptFamily::Ncg: return "ncg";
    case OptFamily::Lbfgs: return "lbfgs";
    case OptFamily::Als: return "als";
  }
  return "unknown";
}

std::optional<OptFamily> family_from_string(std::string_view s) {
  for (OptFamily f : {OptFamily::VecHGrad, OptFamily::Sgd, OptFamily::Nag, OptFamily::Adam,
                      OptFamily::RmsProp, OptFamily::Saga, OptFamily::AdaGrad, OptFamily::Ncg,
                      OptFamily::Lbfgs, OptFamily::Als}) {
    if (s == to_string(f)) return f;
  }
  return std::nullopt;
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIter: return "MAX_ITER";
    case StopReason::SmallDecrease: return "SMALL_DECREASE";
    case StopReason::LossBelowEps1: return "LOSS_BELOW_EPS1";
    case StopReason::GradBelowEps2: return "GRAD_BELOW_EPS2";
    case StopReason::LineSearchFail: return "LINE_SEARCH_FAIL";
  }
  return "UNKNOWN";
}

OptimizerConfig OptimizerConfig::defaults(OptFamily family) {
  OptimizerConfig cfg;
  cfg.family = family;
  switch (family) {
    case OptFamily::Sgd:
      cfg.lr = 1e-4;
      cfg.max_iter = 10000;
      break;
    case OptFamily::Nag:
      cfg.lr = 1e-4;
      cfg.momentum = 0.9;
      cfg.max_iter = 10000;
      break;
    case OptFamily::Adam:
      cfg.lr = 1e-3;
      cfg.max_iter = 10000;
      break;
    case OptFamily::RmsProp:
      cfg.lr = 1e-3;
      cfg.momentum = 0.9;
      cfg.max_iter = 10000;
      break;
    case OptFamily::Saga:
      cfg.lr = 1e-4;
      cfg.max_iter = 10000;
      break;
    case OptFamily::AdaGrad:
      cfg.lr = 1e-2;
      cfg.max_iter = 10000;
      break;
    case OptFamily::Ncg:
      cfg.max_iter = 10000;
      cfg.wolfe.c2 = 0.1;
      break;
    case OptFamily::VecHGrad:
    case OptFamily::Lbfgs:
      cfg.max_iter = 1000;
      cfg.wolfe.c2 = 0.9;
      break;
    case OptFamily::Als:
      cfg.max_iter = 100000;
      break;
  }
  return cfg;
}

Clock steady_clock_fn() {
  return [] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

VectorXd cg_inner(const VectorXd& grad_at_x,
                  const std::function<VectorXd(const VectorXd&)>& hvp, int cg_max_iter,
                  double sigma) {
  const double gnorm = grad_at_x.norm();
  if (gnorm == 0.0) return VectorXd::Zero(grad_at_x.size());
  VectorXd p = -grad_at_x;
  if (cg_max_iter <= 0) return p;
  const double target = sigma * gnorm;
  try {
    VectorXd hp = hvp(p);
    if (!hp.allFinite()) return -grad_at_x;
    VectorXd r = hp + grad_at_x;
    if (r.norm() <= target) return p;
    VectorXd d = -r;
    double rr = r.squaredNorm();
    for (int k = 0; k < cg_max_iter; ++k) {
      VectorXd hd = hvp(d);
      if (!hd.allFinite()) return -grad_at_x;
      const double curvature = d.dot(hd);
      if (curvature <= 0.0) return p;
      const double gamma = rr / curvature;
      p += gamma * d;
      r += gamma * hd;
      const double rr_next = r.squaredNorm();
      if (std::sqrt(rr_next) <= target) return p;
      d = -r + (rr_next / rr) * d;
      rr = rr_next;
    }
    return p;
  } catch (const NonFiniteError&) {
    return -grad_at_x;
  }
}

BaselineState init_baseline_state(OptFamily family, Index dim, Index components,
                                  const OptimizerConfig& cfg) {
  BaselineState s;
  switch (family) {
    case OptFamily::Nag:
      s.velocity = VectorXd::Zero(dim);
      break;
    case OptFamily::Adam:
      s.m1 = VectorXd::Zero(dim);
      s.m2 = VectorXd::Zero(dim);
      break;
    case OptFamily::RmsProp:
    case OptFamily::AdaGrad:
      s.accum = VectorXd::Zero(dim);
      break;
    case OptFamily::Saga:
      if (components <= 0) throw std::invalid_argument("saga needs a finite-sum split");
      s.table = Eigen::MatrixXd::Zero(dim, components);
      s.table_sum = VectorXd::Zero(dim);
      s.rng.seed(cfg.seed);
      break;
    default:
      break;
  }
  return s;
}

int saga_pick_component(BaselineState& state, Index components) {
  state.pending_component = static_cast<int>(state.rng() % static_cast<std::uint64_t>(components));
  return state.pending_component;
}

VectorXd gradient_eval_point(OptFamily family, const BaselineState& state, const VectorXd& x,
                             const OptimizerConfig& cfg) {
  if (family == OptFamily::Nag) return x - cfg.momentum * state.velocity;
  return x;
}

std::pair<VectorXd, BaselineState> baseline_step(OptFamily family, BaselineState state,
                                                 const VectorXd& x, const VectorXd& grad,
                                                 const OptimizerConfig& cfg) {
  VectorXd next;
  switch (family) {
    case OptFamily::Sgd:
      next = x - cfg.lr * grad;
      break;
    case OptFamily::Nag:
      // grad is taken at the lookahead point x - momentum * velocity.
      state.velocity = cfg.momentum * state.velocity + cfg.lr * grad;
      next = x - state.velocity;
      break;
    case OptFamily::Adam: {
      const long t = state.step_count + 1;
      state.m1 = cfg.beta1 * state.m1 + (1.0 - cfg.beta1) * grad;
      state.m2 = cfg.beta2 * state.m2 + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
      next = x - cfg.lr * (state.m1 / c1).cwiseQuotient(
                              ((state.m2 / c2).cwiseSqrt().array() + cfg.eps).matrix());
      break;
    }
    case OptFamily::RmsProp:
      state.accum = cfg.momentum * state.accum + (1.0 - cfg.momentum) * grad.cwiseProduct(grad);
      next = x - cfg.lr * grad.cwiseQuotient((state.accum.cwiseSqrt().array() + cfg.eps).matrix());
      break;
    case OptFamily::AdaGrad:
      state.accum += grad.cwiseProduct(grad);
      next = x - cfg.lr * grad.cwiseQuotient((state.accum.cwiseSqrt().array() + cfg.eps).matrix());
      break;
    case OptFamily::Saga: {
      // grad is the gradient of the pending squared-residual component h_j at
      // x. The variance-reduced estimate of sum_k grad h_k combines it with
      // the stored table, and the chain rule through f = sqrt(sum_k h_k)
      // divides by 2 f(x).
      if (state.pending_component < 0) throw std::logic_error("saga step without a component");
      const Index j = state.pending_component;
      const Index k = state.table.cols();
      VectorXd estimate =
          state.table_sum + static_cast<double>(k) * (grad - state.table.col(j));
      if (state.loss_at_x > 0.0) {
        estimate /= 2.0 * state.loss_at_x;
      } else {
        estimate.setZero();
      }
      next = x - cfg.lr * estimate;
      state.table_sum += grad - state.table.col(j);
      state.table.col(j) = grad;
      state.pending_component = -1;
      break;
    }
    default:
      throw std::invalid_argument("not a first-order family");
  }
  state.step_count += 1;
  return {std::move(next), std::move(state)};
}

namespace {

struct Stepper {
  virtual ~Stepper() = default;
  virtual StepOutcome step(VectorXd& x, double& fx) = 0;
};

double grad_step_for(const OptimizerConfig& cfg, const VectorXd& x) {
  return cfg.grad_eta > 0.0 ? cfg.grad_eta : default_gradient_step(x);
}

// Strong Wolfe search with two fallbacks: retry along steepest descent, then
// plain backtracking. Returns false when nothing achieved a decrease.
bool search_with_fallbacks(const Objective& f, const GradientFn& grad, VectorXd& x, double& fx,
                           const VectorXd& p, const VectorXd& g, bool p_is_steepest,
                           const WolfeParams& params) {
  auto attempt = [&](const VectorXd& dir) -> std::optional<LineSearchResult> {
    if (dir.dot(g) >= 0.0) return std::nullopt;
    try {
      LineSearchResult r = strong_wolfe(f, grad, x, dir, fx, g, params);
      if (r.status == LineSearchStatus::NoDecrease) return std::nullopt;
      return r;
    } catch (const NonFiniteError&) {
      return std::nullopt;
    }
  };
  if (auto r = attempt(p)) {
    x += r->alpha * p;
    fx = r->f_new;
    return true;
  }
  if (!p_is_steepest) {
    if (auto r = attempt(-g)) {
      x += r->alpha * -g;
      fx = r->f_new;
      return true;
    }
  }
  try {
    const double dphi0 = -g.squaredNorm();
    if (dphi0 < 0.0) {
      LineSearchResult r = armijo_backtrack(f, x, -g, fx, dphi0, params.c1, 1.0, params.max_evals);
      if (r.status != LineSearchStatus::NoDecrease) {
        x += r.alpha * -g;
        fx = r.f_new;
        return true;
      }
    }
  } catch (const NonFiniteError&) {
  }
  return false;
}

struct VecHGradStepper final : Stepper {
  const Objective& f;
  const OptimizerConfig& cfg;
  VecHGradStepper(const Objective& f_, const OptimizerConfig& cfg_) : f(f_), cfg(cfg_) {}

  StepOutcome step(VectorXd& x, double& fx) override {
    StepOutcome out;
    VectorXd g;
    const double eta_g = grad_step_for(cfg, x);
    try {
      g = fd_gradient(f, x, eta_g);
    } catch (const NonFiniteError&) {
      out.failed = true;
      return out;
    }
    out.grad_norm = g.norm();
    // At or below the driver's gradient threshold a search would only chase
    // rounding noise; report a no-move and let the stop rules fire.
    if (*out.grad_norm <= std::max(cfg.eps2, 0.0)) return out;
    auto hvp = [&](const VectorXd& d) {
      return hessian_vector(f, x, d, default_hv_step(d), eta_g, &g);
    };
    VectorXd p = cg_inner(g, hvp, cfg.cg_max_iter, cfg.cg_sigma);
    bool steepest = false;
    if (p.dot(g) >= 0.0) {
      p = -g;
      steepest = true;
    }
    GradientFn gradfn = [&](const VectorXd& y) { return fd_gradient(f, y, grad_step_for(cfg, y)); };
    if (!search_with_fallbacks(f, gradfn, x, fx, p, g, steepest, cfg.wolfe)) {
      out.failed = true;
      return out;
    }
    out.moved = true;
    return out;
  }
};

struct NcgStepper final : Stepper {
  const Objective& f;
  const OptimizerConfig& cfg;
  VectorXd g_prev, p_prev;
  bool have_prev = false;
  NcgStepper(const Objective& f_, const OptimizerConfig& cfg_) : f(f_), cfg(cfg_) {}

  StepOutcome step(VectorXd& x, double& fx) override {
    StepOutcome out;
    VectorXd g;
    try {
      g = fd_gradient(f, x, grad_step_for(cfg, x));
    } catch (const NonFiniteError&) {
      out.failed = true;
      return out;
    }
    out.grad_norm = g.norm();
    if (*out.grad_norm <= std::max(cfg.eps2, 0.0)) return out;
    VectorXd p = -g;
    bool steepest = true;
    if (have_prev) {
      // Hestenes-Stiefel coefficient, restarting along steepest descent
      // whenever the formula degenerates or loses the descent property.
      const VectorXd y = g - g_prev;
      const double denom = p_prev.dot(y);
      if (denom != 0.0) {
        const double beta = g.dot(y) / denom;
        if (beta > 0.0 && std::isfinite(beta)) {
          VectorXd cand = -g + beta * p_prev;
          if (cand.dot(g) < 0.0) {
            p = std::move(cand);
            steepest = false;
          }
        }
      }
    }
    GradientFn gradfn = [&](const VectorXd& y) { return fd_gradient(f, y, grad_step_for(cfg, y)); };
    if (!search_with_fallbacks(f, gradfn, x, fx, p, g, steepest, cfg.wolfe)) {
      out.failed = true;
      return out;
    }
    g_prev = std::move(g);
    p_prev = std::move(p);
    have_prev = true;
    out.moved = true;
    return out;
  }
};

struct LbfgsStepper final : Stepper {
  const Objective& f;
  const OptimizerConfig& cfg;
  std::deque<std::pair<VectorXd, VectorXd>> pairs;  // (s, y), newest at back
  VectorXd g_cached;
  bool have_cached = false;
  LbfgsStepper(const Objective& f_, const OptimizerConfig& cfg_) : f(f_), cfg(cfg_) {}

  VectorXd two_loop(const VectorXd& g) const {
    VectorXd q = g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t i = pairs.size(); i-- > 0;) {
      const auto& [s, y] = pairs[i];
      const double rho = 1.0 / y.dot(s);
      alpha[i] = rho * s.dot(q);
      q -= alpha[i] * y;
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, y] = pairs[i];
      const double rho = 1.0 / y.dot(s);
      const double beta = rho * y.dot(q);
      q += (alpha[i] - beta) * s;
    }
    return q;
  }

  StepOutcome step(VectorXd& x, double& fx) override {
    StepOutcome out;
    VectorXd g;
    if (have_cached) {
      g = std::move(g_cached);
      have_cached = false;
    } else {
      try {
        g = fd_gradient(f, x, grad_step_for(cfg, x));
      } catch (const NonFiniteError&) {
        out.failed = true;
        return out;
      }
    }
    out.grad_norm = g.norm();
    if (*out.grad_norm <= std::max(cfg.eps2, 0.0)) return out;
    VectorXd p = -two_loop(g);
    bool steepest = pairs.empty();
    if (p.dot(g) >= 0.0) {
      pairs.clear();
      p = -g;
      steepest = true;
    }
    GradientFn gradfn = [&](const VectorXd& y) { return fd_gradient(f, y, grad_step_for(cfg, y)); };
    const VectorXd x_old = x;
    if (!search_with_fallbacks(f, gradfn, x, fx, p, g, steepest, cfg.wolfe)) {
      out.failed = true;
      return out;
    }
    try {
      g_cached = fd_gradient(f, x, grad_step_for(cfg, x));
      have_cached = true;
      const VectorXd s = x - x_old;
      const VectorXd y = g_cached - g;
      // Curvature guard: skip the pair unless s'y clears a relative floor.
      if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
        pairs.emplace_back(s, y);
        if (pairs.size() > static_cast<std::size_t>(std::max(cfg.history, 1))) pairs.pop_front();
      }
    } catch (const NonFiniteError&) {
      have_cached = false;  // next step recomputes; the move itself stands
    }
    out.moved = true;
    return out;
  }
};

struct FirstOrderStepper final : Stepper {
  const Objective& f;
  const OptimizerConfig& cfg;
  const SumObjective* parts;
  BaselineState state;
  FirstOrderStepper(const Objective& f_, const OptimizerConfig& cfg_, const SumObjective* parts_)
      : f(f_), cfg(cfg_), parts(parts_) {
    state = init_baseline_state(cfg.family, f.dim, parts ? static_cast<Index>(parts->parts.size()) : 0,
                                cfg);
  }

  StepOutcome step(VectorXd& x, double& fx) override {
    StepOutcome out;
    VectorXd g;
    try {
      if (cfg.family == OptFamily::Saga) {
        const int j = saga_pick_component(state, static_cast<Index>(parts->parts.size()));
        state.loss_at_x = fx;
        g = fd_gradient(parts->parts[static_cast<std::size_t>(j)], x, grad_step_for(cfg, x));
      } else {
        const VectorXd at = gradient_eval_point(cfg.family, state, x, cfg);
        g = fd_gradient(f, at, grad_step_for(cfg, at));
      }
    } catch (const NonFiniteError&) {
      out.failed = true;
      return out;
    }
    if (cfg.family != OptFamily::Saga) out.grad_norm = g.norm();
    auto [next, next_state] = baseline_step(cfg.family, std::move(state), x, g, cfg);
    state = std::move(next_state);
    if (!next.allFinite()) {
      out.failed = true;
      return out;
    }
    double f_next;
    try {
      f_next = f.eval(next);
    } catch (const std::exception&) {
      out.failed = true;
      return out;
    }
    if (!std::isfinite(f_next)) {
      out.failed = true;
      return out;
    }
    x = std::move(next);
    fx = f_next;
    out.moved = true;
    return out;
  }
};

}  // namespace

SolveResult run_with_step(const Objective& f, const VectorXd& x0, const OptimizerConfig& cfg,
                          const Clock& clock, const StepFn& step) {
  if (!f.eval) throw std::invalid_argument("objective has no eval function");
  if (f.dim != x0.size()) throw std::invalid_argument("x0 dimension mismatch");
  SolveResult result;
  result.x = x0;
  RunReport& report = result.report;
  const double t0 = clock();
  double fx = f.eval(result.x);
  report.loss_history.push_back(fx);
  report.stop_reason = StopReason::MaxIter;
  if (fx <= cfg.eps1) {
    report.stop_reason = StopReason::LossBelowEps1;
  } else {
    for (long t = 1; t <= cfg.max_iter; ++t) {
      const double f_prev = fx;
      StepOutcome out = step(result.x, fx);
      if (out.failed) {
        report.stop_reason = StopReason::LineSearchFail;
        break;
      }
      report.loss_history.push_back(fx);
      report.iterations = t;
      if (fx <= cfg.eps1) {
        report.stop_reason = StopReason::LossBelowEps1;
        break;
      }
      const double decrease = f_prev - fx;
      if (decrease >= 0.0 && decrease <= cfg.decrease_tol) {
        report.stop_reason = StopReason::SmallDecrease;
        break;
      }
      if (out.grad_norm && *out.grad_norm <= cfg.eps2) {
        report.stop_reason = StopReason::GradBelowEps2;
        break;
      }
    }
  }
  report.final_loss = report.loss_history.back();
  report.wall_time_seconds = clock() - t0;
  return result;
}

SolveResult run_until_convergence(const Objective& f, const VectorXd& x0,
                                  const OptimizerConfig& cfg, const Clock& clock,
                                  const SumObjective* parts) {
  auto with = [&](Stepper&& s) {
    Stepper& ref = s;
    return run_with_step(f, x0, cfg, clock,
                         [&ref](VectorXd& x, double& fx) { return ref.step(x, fx); });
  };
  switch (cfg.family) {
    case OptFamily::VecHGrad:
      return with(VecHGradStepper(f, cfg));
    case OptFamily::Ncg:
      return with(NcgStepper(f, cfg));
    case OptFamily::Lbfgs:
      return with(LbfgsStepper(f, cfg));
    case OptFamily::Sgd:
    case OptFamily::Nag:
    case OptFamily::Adam:
    case OptFamily::RmsProp:
    case OptFamily::AdaGrad:
    case OptFamily::Saga:
      if (cfg.family == OptFamily::Saga && (!parts || parts->parts.empty()))
        throw std::invalid_argument("saga requires a finite-sum objective");
      return with(FirstOrderStepper(f, cfg, parts));
    case OptFamily::Als:
      throw std::invalid_argument("alternating least squares runs through als_solve");
  }
  throw std::invalid_argument("unknown optimizer family");
}

SolveResult vechgrad_solve(const Objective& f, const VectorXd& x0, const OptimizerConfig& cfg,
                           const Clock& clock) {
  OptimizerConfig c = cfg;
  c.family = OptFamily::VecHGrad;
  return run_until_convergence(f, x0, c, clock);
}

SolveResult ncg_solve(const Objective& f, const VectorXd& x0, const OptimizerConfig& cfg,
                      const Clock& clock) {
  OptimizerConfig c = cfg;
  c.family = OptFamily::Ncg;
  return run_until_convergence(f, x0, c, clock);
}

SolveResult lbfgs_solve(const Objective& f, const VectorXd& x0, const OptimizerConfig& cfg,
                        const Clock& clock) {
  OptimizerConfig c = cfg;
  c.family = OptFamily::Lbfgs;
  return run_until_convergence(f, x0, c, clock);
}

}  // namespace tdopt
