#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace tdopt {

// A scalar function of a flat parameter vector.
struct Objective {
  std::function<double(const Eigen::VectorXd&)> eval;
  Eigen::Index dim = 0;
};

// Finite-sum structure f(x) = sqrt(sum_k parts[k](x)) with nonnegative parts,
// used by optimizers that sample one component per step.
struct SumObjective {
  std::vector<Objective> parts;
  Eigen::Index dim = 0;
};

}  // namespace tdopt
