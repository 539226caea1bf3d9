#include "dpca/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace dpca {

double default_rank_tol(const DenseMatrix& A) {
  return 1e-10 * static_cast<double>(std::max<Index>({A.rows(), A.cols(), 1}));
}

SvdFactors svd(const DenseMatrix& A) {
  require_finite(A, "svd");
  const Index m = A.rows(), n = A.cols(), p = std::min(m, n);
  SvdFactors f;
  if (p == 0) {
    f.U = DenseMatrix::Zero(m, 0);
    f.V = DenseMatrix::Zero(n, 0);
    f.sigma = Vector::Zero(0);
    return f;
  }
  if (n > 2 * m) {
    // Wide input: A^T = Q R, so A = R^T Q^T and the SVD of the small R^T gives U and sigma.
    Eigen::HouseholderQR<DenseMatrix> qr(A.transpose());
    const DenseMatrix Rt = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>().toDenseMatrix().transpose();
    Eigen::BDCSVD<DenseMatrix> dec(Rt, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.U = dec.matrixU();
    f.sigma = dec.singularValues();
    f.V = qr.householderQ() * DenseMatrix::Identity(n, m);
    f.V = f.V * dec.matrixV();
  } else {
    Eigen::BDCSVD<DenseMatrix> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.U = dec.matrixU();
    f.V = dec.matrixV();
    f.sigma = dec.singularValues();
  }
  for (Index i = 0; i < p; ++i) {
    Index best = 0;
    double mag = -1.0;
    for (Index r = 0; r < m; ++r) {
      double a = std::abs(f.U(r, i));
      if (a > mag) {
        mag = a;
        best = r;
      }
    }
    if (f.U(best, i) < 0) {
      f.U.col(i) *= -1.0;
      f.V.col(i) *= -1.0;
    }
  }
  return f;
}

SvdFactors truncated_svd(const DenseMatrix& A, Index k) {
  if (k < 0 || k > std::min(A.rows(), A.cols()))
    throw InputError("truncated_svd: k out of range");
  SvdFactors f = svd(A);
  f.U = f.U.leftCols(k).eval();
  f.V = f.V.leftCols(k).eval();
  f.sigma = f.sigma.head(k).eval();
  return f;
}

DenseMatrix pinv(const DenseMatrix& A, double tol) {
  SvdFactors f = svd(A);
  DenseMatrix out = DenseMatrix::Zero(A.cols(), A.rows());
  if (f.sigma.size() == 0) return out;
  const double cut = tol * f.sigma(0);
  for (Index i = 0; i < f.sigma.size(); ++i) {
    if (f.sigma(i) <= cut || f.sigma(i) == 0.0) break;
    out.noalias() += f.V.col(i) * (1.0 / f.sigma(i)) * f.U.col(i).transpose();
  }
  return out;
}

DenseMatrix pinv(const DenseMatrix& A) { return pinv(A, default_rank_tol(A)); }

QrResult qr(const DenseMatrix& A) {
  require_finite(A, "qr");
  const Index m = A.rows(), n = A.cols();
  if (m < n) throw InputError("qr: needs rows >= cols");
  Eigen::HouseholderQR<DenseMatrix> dec(A);
  QrResult out;
  out.Y.Q = dec.householderQ() * DenseMatrix::Identity(m, n);
  out.R = dec.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i) {
    if (out.R(i, i) < 0) {
      out.R.row(i) *= -1.0;
      out.Y.Q.col(i) *= -1.0;
    }
  }
  return out;
}

Index numeric_rank(const DenseMatrix& A, double tol) {
  if (A.size() == 0) return 0;
  Eigen::BDCSVD<DenseMatrix> dec(A);
  const Vector& s = dec.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return r;
}

Index numeric_rank(const DenseMatrix& A) { return numeric_rank(A, default_rank_tol(A)); }

DenseMatrix range_basis(const DenseMatrix& A) {
  SvdFactors f = svd(A);
  Index r = 0;
  const double cut = f.sigma.size() ? default_rank_tol(A) * f.sigma(0) : 0.0;
  while (r < f.sigma.size() && f.sigma(r) > cut && f.sigma(r) > 0.0) ++r;
  return f.U.leftCols(r);
}

OrthoBasis top_left_basis(const DenseMatrix& X, Index k) {
  if (k > X.rows()) throw InputError("top_left_basis: k exceeds row count");
  OrthoBasis out;
  SvdFactors f = svd(X);
  Index have = std::min<Index>(k, f.U.cols());
  out.Q = DenseMatrix::Zero(X.rows(), k);
  out.Q.leftCols(have) = f.U.leftCols(have);
  if (have < k) {
    // Complete with an orthonormal complement.
    DenseMatrix full = svd(out.Q.leftCols(have) * out.Q.leftCols(have).transpose() -
                           DenseMatrix::Identity(X.rows(), X.rows()))
                           .U;
    out.Q.rightCols(k - have) = full.leftCols(k - have);
  }
  Index rank = 0;
  const double cut = f.sigma.size() ? default_rank_tol(X) * f.sigma(0) : 0.0;
  while (rank < f.sigma.size() && f.sigma(rank) > cut && f.sigma(rank) > 0.0) ++rank;
  out.rank_deficient = rank < k;
  return out;
}

OrthoBasis qr_basis(const DenseMatrix& X) {
  QrResult q = qr(X);
  q.Y.rank_deficient = numeric_rank(X) < X.cols();
  return q.Y;
}

SubspaceSvd best_rank_k_in_colspan(const DenseMatrix& A, const DenseMatrix& V, Index k) {
  if (V.rows() != A.rows()) throw InputError("best_rank_k_in_colspan: row mismatch");
  if (k >= V.cols()) throw InputError("best_rank_k_in_colspan: need k < c");
  SubspaceSvd out;
  if (V.rows() >= V.cols() && numeric_rank(V) == V.cols()) {
    QrResult q = qr(V);
    out.Y = q.Y;
    out.Psi = q.R;
  } else {
    out.Y.Q = range_basis(V);
    out.Y.rank_deficient = true;
    out.Psi = out.Y.Q.transpose() * V;
  }
  DenseMatrix Xi = out.Y.Q.transpose() * A;
  Index kk = std::min<Index>(k, std::min(Xi.rows(), Xi.cols()));
  out.Delta = truncated_svd(Xi, kk).U;
  return out;
}

SubspaceSvd best_rank_k_in_rowspan(const DenseMatrix& A, const DenseMatrix& R, Index k) {
  if (R.cols() != A.cols()) throw InputError("best_rank_k_in_rowspan: column mismatch");
  DenseMatrix At = A.transpose(), Rt = R.transpose();
  return best_rank_k_in_colspan(At, Rt, k);
}

DenseMatrix rank_constrained_affine_solve(const DenseMatrix& M, const DenseMatrix& N,
                                          const DenseMatrix& L, Index k) {
  if (N.rows() != M.rows() || L.cols() != M.cols())
    throw InputError("rank_constrained_affine_solve: incompatible dimensions");
  if (k < 0 || k > std::min(N.cols(), L.rows()))
    throw InputError("rank_constrained_affine_solve: k out of range");
  DenseMatrix UN = range_basis(N);
  DenseMatrix VL = range_basis(L.transpose());
  DenseMatrix P = UN.transpose() * M * VL;
  Index kk = std::min<Index>(k, std::min(P.rows(), P.cols()));
  SvdFactors f = truncated_svd(P, kk);
  DenseMatrix Pk = f.U * f.sigma.asDiagonal() * f.V.transpose();
  return pinv(N) * (UN * Pk * VL.transpose()) * pinv(L);
}

double tail_energy(const DenseMatrix& A, Index k) {
  Eigen::BDCSVD<DenseMatrix> dec(A);
  const Vector& s = dec.singularValues();
  double t = 0.0;
  for (Index i = k; i < s.size(); ++i) t += s(i) * s(i);
  return t;
}

double projection_residual(const DenseMatrix& A, const DenseMatrix& U) {
  return (A - U * (U.transpose() * A)).squaredNorm();
}

double span_residual(const DenseMatrix& A, const DenseMatrix& C) {
  DenseMatrix Y = range_basis(C);
  return projection_residual(A, Y);
}

double rank_k_span_residual(const DenseMatrix& A, const DenseMatrix& C, Index k) {
  DenseMatrix Y = range_basis(C);
  if (Y.cols() <= k) return projection_residual(A, Y);
  DenseMatrix Xi = Y.transpose() * A;
  DenseMatrix D = truncated_svd(Xi, k).U;
  return projection_residual(A, Y * D);
}

}  // namespace dpca
