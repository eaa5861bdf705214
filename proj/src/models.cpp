#include "tdopt/models.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace tdopt {

namespace {

using Eigen::Index;
using MapM = Eigen::Map<const Eigen::MatrixXd>;

double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

std::vector<Eigen::MatrixXd> frontal_slices(const DenseTensor& t) {
  const auto& d = t.dims();
  std::vector<Eigen::MatrixXd> out(d[2], Eigen::MatrixXd(d[0], d[1]));
  for (std::size_t k = 0; k < d[2]; ++k)
    for (std::size_t i = 0; i < d[0]; ++i)
      for (std::size_t j = 0; j < d[1]; ++j)
        out[k](static_cast<Index>(i), static_cast<Index>(j)) = t(i, j, k);
  return out;
}

}  // namespace

const char* to_string(Family f) {
  switch (f) {
    case Family::Cp: return "cp";
    case Family::Dedicom: return "dedicom";
    case Family::Paratuck2: return "paratuck2";
  }
  return "?";
}

std::optional<Family> decomposition_from_string(std::string_view s) {
  if (s == "cp") return Family::Cp;
  if (s == "dedicom") return Family::Dedicom;
  if (s == "paratuck2") return Family::Paratuck2;
  return std::nullopt;
}

void validate(const ModelSpec& spec) {
  for (std::size_t d : spec.dims)
    if (d == 0) throw std::invalid_argument("model dims must be positive");
  if (spec.rank == 0) throw std::invalid_argument("rank must be positive");
  if (spec.family == Family::Dedicom && spec.dims[0] != spec.dims[1])
    throw std::invalid_argument("dedicom needs square frontal slices (first two dims equal)");
  if (spec.family == Family::Paratuck2 && spec.rank_q == 0)
    throw std::invalid_argument("paratuck2 needs a positive second rank");
}

std::size_t param_count(const ModelSpec& spec) {
  validate(spec);
  const std::size_t i = spec.dims[0], j = spec.dims[1], k = spec.dims[2];
  switch (spec.family) {
    case Family::Cp:
      return spec.rank * (i + j + k);
    case Family::Dedicom:
      return i * spec.rank + spec.rank * spec.rank + spec.rank * k;
    case Family::Paratuck2: {
      const std::size_t p = spec.rank, q = spec.rank_q;
      return i * p + p * k + p * q + q * k + j * q;
    }
  }
  throw std::logic_error("unreachable");
}

ParamVector pack(const ModelSpec& spec, const Factors& factors) {
  const std::size_t d = param_count(spec);
  ParamVector out{spec, Eigen::VectorXd(static_cast<Index>(d))};
  Index pos = 0;
  auto put = [&](const Eigen::MatrixXd& m, Index rows, Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols)
      throw std::invalid_argument(std::string("pack: bad shape for ") + name);
    out.values.segment(pos, rows * cols) =
        Eigen::Map<const Eigen::VectorXd>(m.data(), rows * cols);
    pos += rows * cols;
  };
  const Index i = static_cast<Index>(spec.dims[0]);
  const Index j = static_cast<Index>(spec.dims[1]);
  const Index k = static_cast<Index>(spec.dims[2]);
  const Index r = static_cast<Index>(spec.rank);
  switch (spec.family) {
    case Family::Cp: {
      const auto& f = std::get<CpFactors>(factors);
      put(f.a, i, r, "A");
      put(f.b, j, r, "B");
      put(f.c, k, r, "C");
      break;
    }
    case Family::Dedicom: {
      const auto& f = std::get<DedicomFactors>(factors);
      put(f.a, i, r, "A");
      put(f.h, r, r, "H");
      put(f.d, r, k, "D");
      break;
    }
    case Family::Paratuck2: {
      const auto& f = std::get<Paratuck2Factors>(factors);
      const Index q = static_cast<Index>(spec.rank_q);
      put(f.a, i, r, "A");
      put(f.da, r, k, "DA");
      put(f.h, r, q, "H");
      put(f.db, q, k, "DB");
      put(f.b, j, q, "B");
      break;
    }
  }
  return out;
}

Factors unpack(const ParamVector& x) {
  const ModelSpec& spec = x.spec;
  if (static_cast<std::size_t>(x.values.size()) != param_count(spec))
    throw std::invalid_argument("unpack: vector length does not match spec");
  const double* base = x.values.data();
  Index pos = 0;
  auto take = [&](Index rows, Index cols) {
    Eigen::MatrixXd m = MapM(base + pos, rows, cols);
    pos += rows * cols;
    return m;
  };
  const Index i = static_cast<Index>(spec.dims[0]);
  const Index j = static_cast<Index>(spec.dims[1]);
  const Index k = static_cast<Index>(spec.dims[2]);
  const Index r = static_cast<Index>(spec.rank);
  switch (spec.family) {
    case Family::Cp: {
      CpFactors f;
      f.a = take(i, r);
      f.b = take(j, r);
      f.c = take(k, r);
      return f;
    }
    case Family::Dedicom: {
      DedicomFactors f;
      f.a = take(i, r);
      f.h = take(r, r);
      f.d = take(r, k);
      return f;
    }
    case Family::Paratuck2: {
      const Index q = static_cast<Index>(spec.rank_q);
      Paratuck2Factors f;
      f.a = take(i, r);
      f.da = take(r, k);
      f.h = take(r, q);
      f.db = take(q, k);
      f.b = take(j, q);
      return f;
    }
  }
  throw std::logic_error("unreachable");
}

DenseTensor reconstruct(const CpFactors& f) {
  if (f.a.cols() != f.b.cols() || f.a.cols() != f.c.cols())
    throw std::invalid_argument("cp factors must share the rank dimension");
  DenseTensor t({static_cast<std::size_t>(f.a.rows()), static_cast<std::size_t>(f.b.rows()),
                 static_cast<std::size_t>(f.c.rows())});
  for (Index i = 0; i < f.a.rows(); ++i)
    for (Index j = 0; j < f.b.rows(); ++j)
      for (Index k = 0; k < f.c.rows(); ++k) {
        double s = 0.0;
        for (Index r = 0; r < f.a.cols(); ++r) s += f.a(i, r) * f.b(j, r) * f.c(k, r);
        t(static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(k)) = s;
      }
  return t;
}

DenseTensor reconstruct(const DedicomFactors& f) {
  const Index i = f.a.rows(), r = f.a.cols(), k = f.d.cols();
  if (f.h.rows() != r || f.h.cols() != r || f.d.rows() != r)
    throw std::invalid_argument("dedicom factor shapes are inconsistent");
  DenseTensor t({static_cast<std::size_t>(i), static_cast<std::size_t>(i),
                 static_cast<std::size_t>(k)});
  for (Index s = 0; s < k; ++s) {
    Eigen::MatrixXd u = f.a * f.d.col(s).asDiagonal();
    Eigen::MatrixXd slice = u * f.h * u.transpose();
    for (Index a = 0; a < i; ++a)
      for (Index b = 0; b < i; ++b)
        t(static_cast<std::size_t>(a), static_cast<std::size_t>(b), static_cast<std::size_t>(s)) =
            slice(a, b);
  }
  return t;
}

DenseTensor reconstruct(const Paratuck2Factors& f) {
  const Index i = f.a.rows(), p = f.a.cols(), q = f.b.cols(), j = f.b.rows(), k = f.da.cols();
  if (f.h.rows() != p || f.h.cols() != q || f.da.rows() != p || f.db.rows() != q ||
      f.db.cols() != k)
    throw std::invalid_argument("paratuck2 factor shapes are inconsistent");
  DenseTensor t({static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                 static_cast<std::size_t>(k)});
  for (Index s = 0; s < k; ++s) {
    Eigen::MatrixXd slice = f.a * f.da.col(s).asDiagonal() * f.h * f.db.col(s).asDiagonal() *
                            f.b.transpose();
    for (Index a = 0; a < i; ++a)
      for (Index b = 0; b < j; ++b)
        t(static_cast<std::size_t>(a), static_cast<std::size_t>(b), static_cast<std::size_t>(s)) =
            slice(a, b);
  }
  return t;
}

DenseTensor reconstruct(const ParamVector& x) {
  Factors f = unpack(x);
  if (auto* cp = std::get_if<CpFactors>(&f)) return reconstruct(*cp);
  if (auto* dd = std::get_if<DedicomFactors>(&f)) return reconstruct(*dd);
  return reconstruct(std::get<Paratuck2Factors>(f));
}

double loss(const ParamVector& x, const DenseTensor& target) {
  const auto& d = x.spec.dims;
  if (target.dims() != std::vector<std::size_t>{d[0], d[1], d[2]})
    throw std::invalid_argument("loss: target dims do not match spec");
  DenseTensor xhat = reconstruct(x);
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double r = target.data()[i] - xhat.data()[i];
    s += r * r;
  }
  return std::sqrt(s);
}

ParamVector init_random(const ModelSpec& spec, std::uint64_t seed) {
  const std::size_t d = param_count(spec);
  std::mt19937_64 eng(seed);
  ParamVector out{spec, Eigen::VectorXd(static_cast<Index>(d))};
  for (Index i = 0; i < out.values.size(); ++i) out.values[i] = uniform01(eng);
  return out;
}

namespace {

// Scratch-owning loss kernels. Offsets follow the pack layout.

struct CpKernel {
  Index i, j, k, r;
  Eigen::MatrixXd t1;  // target unfolded along mode 1, I x (J*K)
  Eigen::MatrixXd kr;  // (J*K) x R
  Eigen::MatrixXd xh;  // I x (J*K)

  explicit CpKernel(const ModelSpec& spec, const DenseTensor& target)
      : i(static_cast<Index>(spec.dims[0])),
        j(static_cast<Index>(spec.dims[1])),
        k(static_cast<Index>(spec.dims[2])),
        r(static_cast<Index>(spec.rank)),
        t1(unfold(target, 1)),
        kr(j * k, r),
        xh(i, j * k) {}

  double residual_sq(const double* x) {
    MapM a(x, i, r), b(x + i * r, j, r), c(x + (i + j) * r, k, r);
    for (Index rr = 0; rr < r; ++rr)
      for (Index jj = 0; jj < j; ++jj)
        kr.col(rr).segment(jj * k, k) = b(jj, rr) * c.col(rr);
    xh.noalias() = a * kr.transpose();
    return (t1 - xh).squaredNorm();
  }

};

struct CpSliceKernel {
  Index i, j, k, r;
  Eigen::MatrixXd tk;  // target frontal slice, I x J
  Eigen::MatrixXd u, sl;

  CpSliceKernel(const ModelSpec& spec, Eigen::MatrixXd slice)
      : i(static_cast<Index>(spec.dims[0])),
        j(static_cast<Index>(spec.dims[1])),
        k(static_cast<Index>(spec.dims[2])),
        r(static_cast<Index>(spec.rank)),
        tk(std::move(slice)),
        u(i, r),
        sl(i, j) {}

  double slice_sq(const double* x, Index s) {
    MapM a(x, i, r), b(x + i * r, j, r), c(x + (i + j) * r, k, r);
    u = a * c.row(s).asDiagonal();
    sl.noalias() = u * b.transpose();
    return (tk - sl).squaredNorm();
  }
};

struct DedicomKernel {
  Index i, k, r;
  std::vector<Eigen::MatrixXd> tk;
  Eigen::MatrixXd u, m, sl;

  explicit DedicomKernel(const ModelSpec& spec, const DenseTensor& target)
      : i(static_cast<Index>(spec.dims[0])),
        k(static_cast<Index>(spec.dims[2])),
        r(static_cast<Index>(spec.rank)),
        tk(frontal_slices(target)),
        u(i, r),
        m(i, r),
        sl(i, i) {}

  double slice_sq(const double* x, Index s) {
    MapM a(x, i, r), h(x + i * r, r, r), d(x + i * r + r * r, r, k);
    u = a * d.col(s).asDiagonal();
    m.noalias() = u * h;
    sl.noalias() = m * u.transpose();
    return (tk[static_cast<std::size_t>(s)] - sl).squaredNorm();
  }

  double residual_sq(const double* x) {
    double acc = 0.0;
    for (Index s = 0; s < k; ++s) acc += slice_sq(x, s);
    return acc;
  }
};

struct Paratuck2Kernel {
  Index i, j, k, p, q;
  std::vector<Eigen::MatrixXd> tk;
  Eigen::MatrixXd u, m, n, sl;

  explicit Paratuck2Kernel(const ModelSpec& spec, const DenseTensor& target)
      : i(static_cast<Index>(spec.dims[0])),
        j(static_cast<Index>(spec.dims[1])),
        k(static_cast<Index>(spec.dims[2])),
        p(static_cast<Index>(spec.rank)),
        q(static_cast<Index>(spec.rank_q)),
        tk(frontal_slices(target)),
        u(i, p),
        m(i, q),
        n(i, q),
        sl(i, j) {}

  double slice_sq(const double* x, Index s) {
    const double* pa = x;
    const double* pda = pa + i * p;
    const double* ph = pda + p * k;
    const double* pdb = ph + p * q;
    const double* pb = pdb + q * k;
    MapM a(pa, i, p), da(pda, p, k), h(ph, p, q), db(pdb, q, k), b(pb, j, q);
    u = a * da.col(s).asDiagonal();
    m.noalias() = u * h;
    n = m * db.col(s).asDiagonal();
    sl.noalias() = n * b.transpose();
    return (tk[static_cast<std::size_t>(s)] - sl).squaredNorm();
  }

  double residual_sq(const double* x) {
    double acc = 0.0;
    for (Index s = 0; s < k; ++s) acc += slice_sq(x, s);
    return acc;
  }
};

template <typename Kernel>
Objective objective_from_kernel(const ModelSpec& spec, const DenseTensor& target) {
  auto kern = std::make_shared<Kernel>(spec, target);
  const Index dim = static_cast<Index>(param_count(spec));
  Objective f;
  f.dim = dim;
  f.eval = [kern, dim](const Eigen::VectorXd& x) {
    if (x.size() != dim) throw std::invalid_argument("objective: wrong parameter length");
    return std::sqrt(kern->residual_sq(x.data()));
  };
  return f;
}

}  // namespace

Objective make_objective(const ModelSpec& spec, const DenseTensor& target) {
  const auto& d = spec.dims;
  if (target.dims() != std::vector<std::size_t>{d[0], d[1], d[2]})
    throw std::invalid_argument("objective: target dims do not match spec");
  switch (spec.family) {
    case Family::Cp:
      return objective_from_kernel<CpKernel>(spec, target);
    case Family::Dedicom:
      return objective_from_kernel<DedicomKernel>(spec, target);
    case Family::Paratuck2:
      return objective_from_kernel<Paratuck2Kernel>(spec, target);
  }
  throw std::logic_error("unreachable");
}

SumObjective make_slice_squared_objectives(const ModelSpec& spec, const DenseTensor& target) {
  const auto& d = spec.dims;
  if (target.dims() != std::vector<std::size_t>{d[0], d[1], d[2]})
    throw std::invalid_argument("objective: target dims do not match spec");
  const Index dim = static_cast<Index>(param_count(spec));
  SumObjective out;
  out.dim = dim;
  const Index nk = static_cast<Index>(spec.dims[2]);
  std::vector<Eigen::MatrixXd> slices = frontal_slices(target);

  // One shared kernel; parts only differ in the captured slice index.
  std::function<double(const double*, Index)> slice_fn;
  switch (spec.family) {
    case Family::Cp: {
      auto kerns = std::make_shared<std::vector<CpSliceKernel>>();
      for (Index s = 0; s < nk; ++s)
        kerns->emplace_back(spec, slices[static_cast<std::size_t>(s)]);
      slice_fn = [kerns](const double* x, Index s) {
        return (*kerns)[static_cast<std::size_t>(s)].slice_sq(x, s);
      };
      break;
    }
    case Family::Dedicom: {
      auto kern = std::make_shared<DedicomKernel>(spec, target);
      slice_fn = [kern](const double* x, Index s) { return kern->slice_sq(x, s); };
      break;
    }
    case Family::Paratuck2: {
      auto kern = std::make_shared<Paratuck2Kernel>(spec, target);
      slice_fn = [kern](const double* x, Index s) { return kern->slice_sq(x, s); };
      break;
    }
  }

  for (Index s = 0; s < nk; ++s) {
    Objective part;
    part.dim = dim;
    part.eval = [slice_fn, s, dim](const Eigen::VectorXd& x) {
      if (x.size() != dim) throw std::invalid_argument("objective: wrong parameter length");
      return slice_fn(x.data(), s);
    };
    out.parts.push_back(std::move(part));
  }
  return out;
}

}  // namespace tdopt
