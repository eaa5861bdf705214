#include "tdopt/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tdopt {

namespace {

std::size_t checked_size(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw std::invalid_argument("tensor order must be at least 1");
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), data_(checked_size(dims_), 0.0) {}

DenseTensor::DenseTensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (checked_size(dims_) != data_.size())
    throw std::invalid_argument("tensor data length does not match dimensions");
}

std::size_t DenseTensor::linear_index(const std::vector<std::size_t>& idx) const {
  if (idx.size() != dims_.size())
    throw std::invalid_argument("index order does not match tensor order");
  std::size_t lin = 0;
  for (std::size_t n = 0; n < dims_.size(); ++n) {
    if (idx[n] >= dims_[n]) throw std::out_of_range("tensor index out of range");
    lin = lin * dims_[n] + idx[n];
  }
  return lin;
}

double DenseTensor::operator()(std::size_t i, std::size_t j, std::size_t k) const {
  return data_[(i * dims_[1] + j) * dims_[2] + k];
}

double& DenseTensor::operator()(std::size_t i, std::size_t j, std::size_t k) {
  return data_[(i * dims_[1] + j) * dims_[2] + k];
}

Eigen::VectorXd vectorize(const DenseTensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
}

double frobenius_norm(const DenseTensor& t) {
  double s = 0.0;
  const double* p = t.data();
  for (std::size_t i = 0; i < t.size(); ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

DenseTensor rank_one(const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.empty()) throw std::invalid_argument("rank_one needs at least one vector");
  // Row-major layout makes the flat array the left-to-right Kronecker product.
  std::vector<double> acc{1.0};
  std::vector<std::size_t> dims;
  for (const auto& v : vectors) {
    if (v.size() == 0) throw std::invalid_argument("rank_one vectors must be nonempty");
    dims.push_back(static_cast<std::size_t>(v.size()));
    std::vector<double> next(acc.size() * static_cast<std::size_t>(v.size()));
    std::size_t pos = 0;
    for (double a : acc)
      for (Eigen::Index i = 0; i < v.size(); ++i) next[pos++] = a * v[i];
    acc = std::move(next);
  }
  return DenseTensor(std::move(dims), std::move(acc));
}

Eigen::MatrixXd unfold(const DenseTensor& t, std::size_t mode) {
  const auto& dims = t.dims();
  if (mode < 1 || mode > dims.size()) throw std::invalid_argument("unfold: invalid mode");
  const std::size_t d = mode - 1;
  const std::size_t rows = dims[d];
  const std::size_t cols = t.size() / rows;

  // Strides for decomposing flat offsets, and for composing column offsets of
  // the remaining indices taken in original order, last fastest.
  std::vector<std::size_t> stride(dims.size());
  std::size_t s = 1;
  for (std::size_t n = dims.size(); n-- > 0;) {
    stride[n] = s;
    s *= dims[n];
  }

  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const double* data = t.data();
  for (std::size_t lin = 0; lin < t.size(); ++lin) {
    std::size_t rem = lin;
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t n = 0; n < dims.size(); ++n) {
      const std::size_t in = rem / stride[n];
      rem %= stride[n];
      if (n == d)
        row = in;
      else
        col = col * dims[n] + in;
    }
    out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = data[lin];
  }
  return out;
}

DenseTensor refold(const Eigen::MatrixXd& m, std::size_t mode,
                   const std::vector<std::size_t>& dims) {
  const std::size_t total = checked_size(dims);
  if (mode < 1 || mode > dims.size()) throw std::invalid_argument("refold: invalid mode");
  const std::size_t d = mode - 1;
  if (static_cast<std::size_t>(m.rows()) != dims[d] ||
      static_cast<std::size_t>(m.cols()) != total / dims[d])
    throw std::invalid_argument("refold: matrix shape does not match dimensions");

  std::vector<std::size_t> stride(dims.size());
  std::size_t s = 1;
  for (std::size_t n = dims.size(); n-- > 0;) {
    stride[n] = s;
    s *= dims[n];
  }

  std::vector<double> data(total);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t n = 0; n < dims.size(); ++n) {
      const std::size_t in = rem / stride[n];
      rem %= stride[n];
      if (n == d)
        row = in;
      else
        col = col * dims[n] + in;
    }
    data[lin] = m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }
  return DenseTensor(dims, std::move(data));
}

Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("khatri_rao: column counts must match");
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.cols(); ++r)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.col(r).segment(i * b.rows(), b.rows()) = a(i, r) * b.col(r);
  return out;
}

}  // namespace tdopt
