#pragma once

#include <Eigen/Dense>

#include "tdopt/models.hpp"
#include "tdopt/optimizers.hpp"
#include "tdopt/tensor.hpp"

namespace tdopt {

// Alternating least squares. One step is one full sweep over the blocks of a
// decomposition, each block solved as an exact linear least-squares problem
// with the others fixed (pseudoinverse with relative cutoff 1e-12 when a
// subproblem is singular). Sweeps are what the iteration budget counts.

// Sweep order A, B, C; every block update is loss non-increasing.
CpFactors als_cp_step(CpFactors f, const DenseTensor& target);

// DEDICOM stages, in sweep order:
//   0: basis A from the slice pairs (X_k, X_k') stacked against the previous
//      A — a linearization, so this stage alone may increase the loss;
//   1: interaction H, exact;
//   2: each slice's diagonal via the linearization that freezes its right
//      occurrence, accepted per slice only when the slice residual does not
//      grow (so the stage never increases the loss).
DedicomFactors als_dedicom_update(DedicomFactors f, const DenseTensor& target, int stage);
DedicomFactors als_dedicom_step(DedicomFactors f, const DenseTensor& target);

// PARATUCK2 blocks in sweep order 0..4 = A, D^A, H, D^B, B; every block
// enters the model linearly, so each update is exact and non-increasing.
Paratuck2Factors als_paratuck2_update(Paratuck2Factors f, const DenseTensor& target, int block);
Paratuck2Factors als_paratuck2_step(Paratuck2Factors f, const DenseTensor& target);

// Runs sweeps from the packed starting point under the shared stop-rule
// driver (gradient-free: the gradient-norm rule never fires).
SolveResult als_solve(const ModelSpec& spec, const DenseTensor& target,
                      const Eigen::VectorXd& x0, const OptimizerConfig& cfg, const Clock& clock);

}  // namespace tdopt
