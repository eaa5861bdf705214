#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace tdopt {

// Dense real-valued tensor of order >= 1 with row-major storage:
// the last index varies fastest in the flat data array.
class DenseTensor {
 public:
  DenseTensor() = default;

  // Zero-filled tensor. Every dimension must be positive.
  explicit DenseTensor(std::vector<std::size_t> dims);

  // Takes ownership of data; data.size() must equal the product of dims.
  DenseTensor(std::vector<std::size_t> dims, std::vector<double> data);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::size_t linear_index(const std::vector<std::size_t>& idx) const;

  double at(const std::vector<std::size_t>& idx) const { return data_[linear_index(idx)]; }
  double& at(const std::vector<std::size_t>& idx) { return data_[linear_index(idx)]; }

  // Order-3 convenience accessors.
  double operator()(std::size_t i, std::size_t j, std::size_t k) const;
  double& operator()(std::size_t i, std::size_t j, std::size_t k);

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

// Flattens to a column vector in storage order, so for an order-3 tensor the
// entries appear as x(0,0,0), x(0,0,1), ..., x(0,0,K-1), x(0,1,0), ...
Eigen::VectorXd vectorize(const DenseTensor& t);

double frobenius_norm(const DenseTensor& t);

// Outer product of N vectors: x[i1,...,iN] = v1[i1] * ... * vN[iN].
DenseTensor rank_one(const std::vector<Eigen::VectorXd>& vectors);

// Mode-n matricization, mode is 1-based. Row r holds all entries whose
// mode-n index equals r; columns enumerate the remaining indices in their
// original order with the last one varying fastest (consistent with the
// row-major layout). Under this ordering a CP tensor satisfies
//   unfold(X, 1) = A1 * khatri_rao(A2, A3)^T
// exactly, and analogously for the other modes with the mode-n factor pulled
// out in front of the forward-ordered chain of the remaining factors.
Eigen::MatrixXd unfold(const DenseTensor& t, std::size_t mode);

// Inverse of unfold: rebuilds a tensor of shape dims from its mode-n
// matricization. mode is 1-based.
DenseTensor refold(const Eigen::MatrixXd& m, std::size_t mode,
                   const std::vector<std::size_t>& dims);

// Column-wise Kronecker product: column r of the result is kron(a.col(r),
// b.col(r)), where kron(u, v) lays out u-major blocks (v's index fastest).
// a and b must have the same number of columns.
Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace tdopt
