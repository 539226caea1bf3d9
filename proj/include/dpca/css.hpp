#pragma once

#include "dpca/linalg.hpp"
#include "dpca/sketch.hpp"
#include "dpca/types.hpp"

#include <optional>
#include <vector>

namespace dpca {

// Selects and rescales columns: S has column t equal to weight[t] * e_{index[t]}.
struct SamplingMatrix {
  Index width = 0;
  std::vector<Index> index;
  std::vector<double> weight;

  Index count() const { return static_cast<Index>(index.size()); }
  DenseMatrix dense() const;
  // Selected columns of A, unscaled.
  DenseMatrix select(const DenseMatrix& A) const;
};

struct BssReport {
  SamplingMatrix S;
  double sigma_k_sq = 0.0;   // sigma_k^2(V^T S)
  double es_frob_sq = 0.0;   // ||E S||_F^2
  double e_frob_sq = 0.0;    // ||E||_F^2
  Index greedy_distinct = 0; // distinct columns chosen by the barrier steps before padding
};

// Dual-set spectral-Frobenius sparsification. V is w x k with orthonormal columns,
// E is m x w. Throws InternalError if a postcondition fails.
BssReport bss_sampling_report(const DenseMatrix& V, const DenseMatrix& E, Index ell);
SamplingMatrix bss_sampling(const DenseMatrix& V, const DenseMatrix& E, Index ell);

// Barrier steps on the row vectors of V and the squared column norms of E.
// Returns the accumulated (unscaled) weight of every column.
std::vector<double> bss_barrier_weights(const DenseMatrix& V, const Vector& e_norms_sq, Index ell);

// Final selection from barrier weights: scaling, padding to ell distinct columns, postcondition checks.
BssReport bss_finish(const DenseMatrix& V, const Vector& e_norms_sq, Index ell, const std::vector<double>& raw);

// Column indices (ascending) of c columns with ||G - C C^+ G||_F^2 <= (1 + (1 - sqrt(k/c))^-2) ||G - G_k||_F^2.
std::vector<Index> deterministic_css(const DenseMatrix& G, Index k, Index c);

double css_factor(Index k, Index c);

// Draws count i.i.d. indices from the distribution proportional to weights,
// using uniforms prf_uniform(seed, t, 0).
std::vector<Index> sample_from_weights(const std::vector<double>& weights, Index count, const SketchSeed& seed);

struct AdaptiveSample {
  std::vector<Index> index;  // with replacement, in draw order
  bool empty = false;        // residual was zero, nothing sampled
};

// Samples c2 columns of A with probability proportional to squared norms of A - V V^+ A.
AdaptiveSample adaptive_cols(const DenseMatrix& A, const DenseMatrix& V, Index c2, double beta,
                             const SketchSeed& seed);

struct ApproxSubspace {
  OrthoBasis Y;       // orthonormal basis of span(V)
  DenseMatrix Delta;  // rank(V) x k, orthonormal columns
  Index xi = 0;
  DenseMatrix U() const { return Y.Q * Delta; }
};

Index subspace_sketch_size(Index c, double eps);

// Rank-revealing basis of span(V): Y and Z with V = Y Z.
struct SpanFactor {
  DenseMatrix Y;
  DenseMatrix Z;
};
SpanFactor span_factor(const DenseMatrix& V);

// Top-k left singular vectors of Xi, completed to k columns if rank(Xi) < k.
DenseMatrix top_k_left(const DenseMatrix& Xi, Index k);

// Sign matrix W (xi x n, +-1) over global column indices, stream kSubspace.
DenseMatrix subspace_sign_block(std::uint64_t seed, Index xi, Index col_begin, Index cols);

// Y^T A W^T with W = sign block / sqrt(n); Delta = top-k left singular vectors.
ApproxSubspace approx_subspace_svd(const DenseMatrix& A, const DenseMatrix& V, Index k, double eps,
                                   std::uint64_t seed, Index xi = 0);

struct ResidualEstimate {
  int machine = 0;
  double residual = 0.0;
  double beta = 0.0;
};

// Smallest power of two >= ||A_i - C C^+ A_i||_F^2, or 0 when the residual is at most 1e-24.
double residual_beta(double residual);
ResidualEstimate residual_beta(const DenseMatrix& Ai, const DenseMatrix& C, int machine = 0);

// Squared column norms of A - C C^+ A.
Vector residual_column_norms(const DenseMatrix& A, const DenseMatrix& C);

}  // namespace dpca
