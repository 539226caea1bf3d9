#pragma once

#include "dpca/types.hpp"

namespace dpca {

// Relative rank tolerance used when none is given: 1e-10 * max(m, n).
double default_rank_tol(const DenseMatrix& A);

// Thin SVD with a deterministic sign convention: in every left singular
// vector the largest-magnitude entry (lowest row on ties) is positive.
SvdFactors svd(const DenseMatrix& A);
SvdFactors truncated_svd(const DenseMatrix& A, Index k);

DenseMatrix pinv(const DenseMatrix& A);
DenseMatrix pinv(const DenseMatrix& A, double tol);

struct QrResult {
  OrthoBasis Y;
  DenseMatrix R;
};

// Householder QR with non-negative diagonal in R. Requires rows >= cols.
QrResult qr(const DenseMatrix& A);

Index numeric_rank(const DenseMatrix& A, double tol);
Index numeric_rank(const DenseMatrix& A);

// Orthonormal basis of the column space, from the SVD, numerically rank-revealing.
DenseMatrix range_basis(const DenseMatrix& A);

// k orthonormal columns spanning the dominant k-dimensional column space of X.
// Flags the result when rank(X) < k.
OrthoBasis top_left_basis(const DenseMatrix& X, Index k);

// Orthonormal basis of span(X) for X with k columns, via QR.
OrthoBasis qr_basis(const DenseMatrix& X);

struct SubspaceSvd {
  OrthoBasis Y;
  DenseMatrix Psi;
  DenseMatrix Delta;
};

// Y * Delta * Delta^T * Y^T * A is the best rank-k approximation of A inside span(V).
SubspaceSvd best_rank_k_in_colspan(const DenseMatrix& A, const DenseMatrix& V, Index k);

// A * Y * Delta * Delta^T * Y^T is the best rank-k approximation of A inside rowspan(R).
// Here Y is an orthonormal basis of the row space of R (n x r) and Psi = Y^T R^T.
SubspaceSvd best_rank_k_in_rowspan(const DenseMatrix& A, const DenseMatrix& R, Index k);

// argmin_{rank(X) <= k} ||M - N X L||_F with minimum Frobenius norm.
DenseMatrix rank_constrained_affine_solve(const DenseMatrix& M, const DenseMatrix& N,
                                          const DenseMatrix& L, Index k);

// Error helpers.
double tail_energy(const DenseMatrix& A, Index k);
double projection_residual(const DenseMatrix& A, const DenseMatrix& U);
double span_residual(const DenseMatrix& A, const DenseMatrix& C);
double rank_k_span_residual(const DenseMatrix& A, const DenseMatrix& C, Index k);

}  // namespace dpca
