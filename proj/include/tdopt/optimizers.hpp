#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tdopt/linesearch.hpp"
#include "tdopt/objective.hpp"

namespace tdopt {

enum class OptFamily {
  VecHGrad,
  Sgd,
  Nag,
  Adam,
  RmsProp,
  Saga,
  AdaGrad,
  Ncg,
  Lbfgs,
  Als,
};

const char* to_string(OptFamily f);
std::optional<OptFamily> family_from_string(std::string_view s);

struct OptimizerConfig {
  OptFamily family = OptFamily::VecHGrad;
  double lr = 1e-4;
  double momentum = 0.9;  // NAG momentum and RMSProp decay
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int history = 10;        // L-BFGS memory
  int cg_max_iter = 20;    // inner CG budget
  double cg_sigma = 0.5;   // inner CG residual fraction
  double eps1 = 1.0;       // stop when loss <= eps1
  double eps2 = 1e-6;      // stop when gradient norm <= eps2
  long max_iter = 1000;
  double decrease_tol = 0.001;  // stop when 0 <= f_prev - f_next <= this
  double grad_eta = 0.0;        // finite-difference step; 0 = per-point heuristic
  std::uint64_t seed = 0;       // component sampling (SAGA)
  WolfeParams wolfe;

  // Per-family learning rates, budgets, and Wolfe constants.
  static OptimizerConfig defaults(OptFamily family);
};

enum class StopReason { MaxIter, SmallDecrease, LossBelowEps1, GradBelowEps2, LineSearchFail };

const char* to_string(StopReason r);

struct RunReport {
  std::vector<double> loss_history;  // iterations + 1 entries, starting at f(x0)
  double final_loss = 0.0;
  long iterations = 0;
  double wall_time_seconds = 0.0;
  StopReason stop_reason = StopReason::MaxIter;
  // Filled by the benchmark layer from loss_history; empty when undefined.
  std::optional<double> convergence_rate_q;
};

struct SolveResult {
  Eigen::VectorXd x;
  RunReport report;
};

// Monotonic seconds. Injected so tests and reproducible runs can use a
// deterministic counter.
using Clock = std::function<double()>;
Clock steady_clock_fn();

// Linear conjugate gradient on H p = -g starting from p0 = -g, where H is
// reached only through hvp. Returns once |H p + g| <= sigma |g| or after
// cg_max_iter updates. Nonpositive curvature along a search direction stops
// the loop at the last iterate (-g if no update happened yet); a non-finite
// product falls back to -g outright. Zero g gives zero p.
Eigen::VectorXd cg_inner(const Eigen::VectorXd& grad_at_x,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& hvp,
                         int cg_max_iter, double sigma);

// State carried between first-order updates.
struct BaselineState {
  long step_count = 0;
  Eigen::VectorXd velocity;   // NAG
  Eigen::VectorXd m1, m2;     // Adam moments
  Eigen::VectorXd accum;      // RMSProp / AdaGrad squared-gradient history
  Eigen::MatrixXd table;      // SAGA per-component gradient table, d x K
  Eigen::VectorXd table_sum;  // row sums of table
  std::mt19937_64 rng;        // SAGA component sampling
  int pending_component = -1; // component chosen for the step in flight
  double loss_at_x = 0.0;     // SAGA chain-rule denominator, set by the driver
};

BaselineState init_baseline_state(OptFamily family, Eigen::Index dim, Eigen::Index components,
                                  const OptimizerConfig& cfg);

// Chooses the component whose gradient the next SAGA step consumes.
int saga_pick_component(BaselineState& state, Eigen::Index components);

// Where the family wants its gradient: x itself, or the momentum lookahead.
Eigen::VectorXd gradient_eval_point(OptFamily family, const BaselineState& state,
                                    const Eigen::VectorXd& x, const OptimizerConfig& cfg);

// One first-order update. grad is the gradient at gradient_eval_point (for
// SAGA: the gradient of the pending component at x). Deterministic given
// (state, grad, cfg).
std::pair<Eigen::VectorXd, BaselineState> baseline_step(OptFamily family, BaselineState state,
                                                        const Eigen::VectorXd& x,
                                                        const Eigen::VectorXd& grad,
                                                        const OptimizerConfig& cfg);

// What one optimizer iteration did. A step that moves updates x and fx in
// place; a failed step terminates the run at the previous iterate.
struct StepOutcome {
  bool moved = false;
  bool failed = false;
  std::optional<double> grad_norm;  // at the point the step consumed, if any
};

using StepFn = std::function<StepOutcome(Eigen::VectorXd& x, double& fx)>;

// Shared stop-rule driver: runs step until max_iter, the loss threshold, the
// small-decrease rule, or the gradient-norm rule fires, recording the loss
// after every iteration and timing with the injected clock. Also the hook for
// iteration schemes defined outside this module (alternating least squares).
SolveResult run_with_step(const Objective& f, const Eigen::VectorXd& x0,
                          const OptimizerConfig& cfg, const Clock& clock, const StepFn& step);

// Driver specialized to cfg.family. parts is required by SAGA (its
// finite-sum split) and ignored by everyone else.
SolveResult run_until_convergence(const Objective& f, const Eigen::VectorXd& x0,
                                  const OptimizerConfig& cfg, const Clock& clock,
                                  const SumObjective* parts = nullptr);

// Family-specific fronts; each forces cfg.family and calls the driver.
SolveResult vechgrad_solve(const Objective& f, const Eigen::VectorXd& x0,
                           const OptimizerConfig& cfg, const Clock& clock);
SolveResult ncg_solve(const Objective& f, const Eigen::VectorXd& x0, const OptimizerConfig& cfg,
                      const Clock& clock);
SolveResult lbfgs_solve(const Objective& f, const Eigen::VectorXd& x0,
                        const OptimizerConfig& cfg, const Clock& clock);

}  // namespace tdopt
