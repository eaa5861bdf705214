#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "tdopt/objective.hpp"
#include "tdopt/tensor.hpp"

namespace tdopt {

enum class Family { Cp, Dedicom, Paratuck2 };

const char* to_string(Family f);
std::optional<Family> decomposition_from_string(std::string_view s);

// Shape of one decomposition problem on an order-3 target tensor.
// rank is R for CP and DEDICOM and P for PARATUCK2; rank_q is PARATUCK2's Q
// and is ignored by the other families.
struct ModelSpec {
  Family family = Family::Cp;
  std::array<std::size_t, 3> dims{};  // I, J, K
  std::size_t rank = 0;
  std::size_t rank_q = 0;
};

// Throws std::invalid_argument on nonpositive extents/ranks or a DEDICOM spec
// whose first two dims differ (its slices A D_k H D_k A^T are square).
void validate(const ModelSpec& spec);

// Flat parameter count:
//   CP        R(I+J+K)
//   DEDICOM   IR + R^2 + RK          (D slices stored as diagonals)
//   PARATUCK2 IP + PK + PQ + QK + JQ
std::size_t param_count(const ModelSpec& spec);

// Flat parameter vector plus the spec describing its layout.
struct ParamVector {
  ModelSpec spec;
  Eigen::VectorXd values;
};

struct CpFactors {
  Eigen::MatrixXd a;  // I x R
  Eigen::MatrixXd b;  // J x R
  Eigen::MatrixXd c;  // K x R
};

struct DedicomFactors {
  Eigen::MatrixXd a;  // I x R
  Eigen::MatrixXd h;  // R x R
  Eigen::MatrixXd d;  // R x K, column k holds the diagonal of D_k
};

struct Paratuck2Factors {
  Eigen::MatrixXd a;   // I x P
  Eigen::MatrixXd da;  // P x K, column k holds the diagonal of D^A_k
  Eigen::MatrixXd h;   // P x Q
  Eigen::MatrixXd db;  // Q x K, column k holds the diagonal of D^B_k
  Eigen::MatrixXd b;   // J x Q
};

using Factors = std::variant<CpFactors, DedicomFactors, Paratuck2Factors>;

// Layout of the flat vector, grouped by factor, each matrix column-major:
//   CP        [A | B | C]
//   DEDICOM   [A | H | diag D_1 .. diag D_K]
//   PARATUCK2 [A | diag D^A_1 .. diag D^A_K | H | diag D^B_1 .. diag D^B_K | B]
ParamVector pack(const ModelSpec& spec, const Factors& factors);
Factors unpack(const ParamVector& x);

DenseTensor reconstruct(const CpFactors& f);
DenseTensor reconstruct(const DedicomFactors& f);
DenseTensor reconstruct(const Paratuck2Factors& f);
DenseTensor reconstruct(const ParamVector& x);

// Frobenius norm of the residual, |target - reconstruct(x)|. Not squared.
double loss(const ParamVector& x, const DenseTensor& target);

// Deterministic i.i.d. uniform [0,1) entries.
ParamVector init_random(const ModelSpec& spec, std::uint64_t seed);

// Residual-norm objective over the flat parameter vector. The returned
// closure owns preallocated scratch; a single instance is not safe for
// concurrent calls, but distinct instances are independent.
Objective make_objective(const ModelSpec& spec, const DenseTensor& target);

// Squared residual restricted to frontal slice k, one part per slice, so the
// full loss is sqrt(sum of parts).
SumObjective make_slice_squared_objectives(const ModelSpec& spec, const DenseTensor& target);

}  // namespace tdopt
