#include "tdopt/als.hpp"

#include <stdexcept>
#include <variant>

namespace tdopt {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Moore-Penrose inverse with singular values below 1e-12 of the largest
// treated as zero, so singular subproblems fall back to the min-norm solve.
MatrixXd pseudo_inverse(const MatrixXd& m) {
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-12 * sv[0] : 0.0;
  VectorXd inv = VectorXd::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff && sv[i] > 0.0) inv[i] = 1.0 / sv[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

MatrixXd frontal_slice(const DenseTensor& t, Index k) {
  const Index rows = static_cast<Index>(t.dims()[0]);
  const Index cols = static_cast<Index>(t.dims()[1]);
  const Index depth = static_cast<Index>(t.dims()[2]);
  // Row-major layout: entry (i, j, k) sits at (i * cols + j) * depth + k.
  using Stride = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;
  return Eigen::Map<const MatrixXd, 0, Stride>(t.data() + k, rows, cols,
                                               Stride(depth, cols * depth));
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

void require_order3(const DenseTensor& t) {
  if (t.order() != 3) throw std::invalid_argument("target must be a third-order tensor");
}

}  // namespace

CpFactors als_cp_step(CpFactors f, const DenseTensor& target) {
  require_order3(target);
  // Each factor is the exact least-squares solution of the unfolded system
  // unfold(X, n) = F_n * khatri_rao(other1, other2)', via the Gram identity
  // (KR'KR) = (U'U) o (V'V).
  auto solve_factor = [](const MatrixXd& xn, const MatrixXd& u, const MatrixXd& v) {
    const MatrixXd kr = khatri_rao(u, v);
    const MatrixXd gram = (u.transpose() * u).cwiseProduct(v.transpose() * v);
    return (xn * kr * pseudo_inverse(gram)).eval();
  };
  f.a = solve_factor(unfold(target, 1), f.b, f.c);
  f.b = solve_factor(unfold(target, 2), f.a, f.c);
  f.c = solve_factor(unfold(target, 3), f.a, f.b);
  return f;
}

DedicomFactors als_dedicom_update(DedicomFactors f, const DenseTensor& target, int stage) {
  require_order3(target);
  const Index r = f.h.rows();
  const Index k_count = f.d.cols();
  switch (stage) {
    case 0: {
      // Basis update: stack X_k against F_k = D_k H D_k A' and X_k' against
      // G_k = D_k H' D_k A' (the previous A on the right side), then solve
      // A [F_1 G_1 ...] = [X_1 X_1' ...] through its normal equations.
      MatrixXd s1 = MatrixXd::Zero(f.a.rows(), r);
      MatrixXd s2 = MatrixXd::Zero(r, r);
      for (Index k = 0; k < k_count; ++k) {
        const auto dk = f.d.col(k).asDiagonal();
        const MatrixXd fk = dk * f.h * dk * f.a.transpose();
        const MatrixXd gk = dk * f.h.transpose() * dk * f.a.transpose();
        const MatrixXd xk = frontal_slice(target, k);
        s1 += xk * fk.transpose() + xk.transpose() * gk.transpose();
        s2 += fk * fk.transpose() + gk * gk.transpose();
      }
      f.a = s1 * pseudo_inverse(s2);
      return f;
    }
    case 1: {
      // Interaction update: vec(X_k) = (U_k (x) U_k) vec(H) with U_k = A D_k;
      // solved exactly through the stacked normal equations.
      MatrixXd n = MatrixXd::Zero(r * r, r * r);
      VectorXd rhs = VectorXd::Zero(r * r);
      for (Index k = 0; k < k_count; ++k) {
        const MatrixXd u = f.a * f.d.col(k).asDiagonal();
        const MatrixXd gram = u.transpose() * u;
        n += kron(gram, gram);
        const MatrixXd proj = u.transpose() * frontal_slice(target, k) * u;
        rhs += Eigen::Map<const VectorXd>(proj.data(), r * r);
      }
      const VectorXd h = pseudo_inverse(n) * rhs;
      f.h = Eigen::Map<const MatrixXd>(h.data(), r, r);
      return f;
    }
    case 2: {
      // Diagonal updates: freeze the right occurrence at the current value,
      // solve the linear system in the left one, and keep the result only if
      // the true slice residual did not grow.
      const MatrixXd gram_a = f.a.transpose() * f.a;
      for (Index k = 0; k < k_count; ++k) {
        const auto dk = f.d.col(k).asDiagonal();
        const MatrixXd m = f.h * dk * f.a.transpose();  // R x I
        const MatrixXd n = gram_a.cwiseProduct(m * m.transpose());
        const MatrixXd xk = frontal_slice(target, k);
        const VectorXd rhs = (f.a.transpose() * xk * m.transpose()).diagonal();
        const VectorXd cand = pseudo_inverse(n) * rhs;
        auto slice_residual = [&](const VectorXd& diag) {
          const auto dd = diag.asDiagonal();
          return (xk - f.a * dd * f.h * dd * f.a.transpose()).squaredNorm();
        };
        if (slice_residual(cand) <= slice_residual(f.d.col(k))) f.d.col(k) = cand;
      }
      return f;
    }
    default:
      throw std::invalid_argument("dedicom stage must be 0, 1 or 2");
  }
}

DedicomFactors als_dedicom_step(DedicomFactors f, const DenseTensor& target) {
  f = als_dedicom_update(std::move(f), target, 0);
  f = als_dedicom_update(std::move(f), target, 1);
  f = als_dedicom_update(std::move(f), target, 2);
  return f;
}

Paratuck2Factors als_paratuck2_update(Paratuck2Factors f, const DenseTensor& target, int block) {
  require_order3(target);
  const Index p = f.h.rows();
  const Index q = f.h.cols();
  const Index k_count = f.da.cols();
  switch (block) {
    case 0: {  // A: X_k = A F_k with F_k = D^A_k H D^B_k B'
      MatrixXd s1 = MatrixXd::Zero(f.a.rows(), p);
      MatrixXd s2 = MatrixXd::Zero(p, p);
      for (Index k = 0; k < k_count; ++k) {
        const MatrixXd fk =
            f.da.col(k).asDiagonal() * f.h * f.db.col(k).asDiagonal() * f.b.transpose();
        s1 += frontal_slice(target, k) * fk.transpose();
        s2 += fk * fk.transpose();
      }
      f.a = s1 * pseudo_inverse(s2);
      return f;
    }
    case 1: {  // D^A: X_k = A diag(d) M_k with M_k = H D^B_k B', linear per slice
      const MatrixXd gram_a = f.a.transpose() * f.a;
      for (Index k = 0; k < k_count; ++k) {
        const MatrixXd m = f.h * f.db.col(k).asDiagonal() * f.b.transpose();
        const MatrixXd n = gram_a.cwiseProduct(m * m.transpose());
        const VectorXd rhs =
            (f.a.transpose() * frontal_slice(target, k) * m.transpose()).diagonal();
        f.da.col(k) = pseudo_inverse(n) * rhs;
      }
      return f;
    }
    case 2: {  // H: vec(X_k) = (B D^B_k (x) A D^A_k) vec(H)
      MatrixXd n = MatrixXd::Zero(p * q, p * q);
      VectorXd rhs = VectorXd::Zero(p * q);
      for (Index k = 0; k < k_count; ++k) {
        const MatrixXd u = f.a * f.da.col(k).asDiagonal();
        const MatrixXd v = f.b * f.db.col(k).asDiagonal();
        n += kron(v.transpose() * v, u.transpose() * u);
        const MatrixXd proj = u.transpose() * frontal_slice(target, k) * v;
        rhs += Eigen::Map<const VectorXd>(proj.data(), p * q);
      }
      const VectorXd h = pseudo_inverse(n) * rhs;
      f.h = Eigen::Map<const MatrixXd>(h.data(), p, q);
      return f;
    }
    case 3: {  // D^B: X_k = W_k diag(d) B' with W_k = A D^A_k H, linear per slice
      const MatrixXd gram_b = f.b.transpose() * f.b;
      for (Index k = 0; k < k_count; ++k) {
        const MatrixXd w = f.a * f.da.col(k).asDiagonal() * f.h;
        const MatrixXd n = (w.transpose() * w).cwiseProduct(gram_b);
        const VectorXd rhs = (w.transpose() * frontal_slice(target, k) * f.b).diagonal();
        f.db.col(k) = pseudo_inverse(n) * rhs;
      }
      return f;
    }
    case 4: {  // B: X_k' = B G_k with G_k = D^B_k H' D^A_k A'
      MatrixXd s1 = MatrixXd::Zero(f.b.rows(), q);
      MatrixXd s2 = MatrixXd::Zero(q, q);
      for (Index k = 0; k < k_count; ++k) {
        const MatrixXd gk =
            f.db.col(k).asDiagonal() * f.h.transpose() * f.da.col(k).asDiagonal() * f.a.transpose();
        s1 += frontal_slice(target, k).transpose() * gk.transpose();
        s2 += gk * gk.transpose();
      }
      f.b = s1 * pseudo_inverse(s2);
      return f;
    }
    default:
      throw std::invalid_argument("paratuck2 block must be 0..4");
  }
}

Paratuck2Factors als_paratuck2_step(Paratuck2Factors f, const DenseTensor& target) {
  for (int block = 0; block < 5; ++block) f = als_paratuck2_update(std::move(f), target, block);
  return f;
}

SolveResult als_solve(const ModelSpec& spec, const DenseTensor& target, const Eigen::VectorXd& x0,
                      const OptimizerConfig& cfg, const Clock& clock) {
  validate(spec);
  require_order3(target);
  const Objective f = make_objective(spec, target);
  StepFn sweep = [&spec, &target](Eigen::VectorXd& x, double& fx) {
    ParamVector pv{spec, std::move(x)};
    Factors fac = unpack(pv);
    if (auto* cp = std::get_if<CpFactors>(&fac)) {
      fac = als_cp_step(std::move(*cp), target);
    } else if (auto* dd = std::get_if<DedicomFactors>(&fac)) {
      fac = als_dedicom_step(std::move(*dd), target);
    } else {
      fac = als_paratuck2_step(std::move(std::get<Paratuck2Factors>(fac)), target);
    }
    ParamVector next = pack(pv.spec, fac);
    fx = loss(next, target);
    x = std::move(next.values);
    StepOutcome out;
    out.moved = true;
    return out;
  };
  return run_with_step(f, x0, cfg, clock, sweep);
}

}  // namespace tdopt
