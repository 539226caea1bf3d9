#pragma once

#include "dpca/css.hpp"
#include "dpca/dist_css.hpp"
#include "dpca/harness.hpp"

#include <cstdint>
#include <vector>

namespace dpca {

struct FastParams {
  Index k = 1;
  double eps = 0.5;
  double delta = 0.1;

  // ceil(log2(1/delta)) + 1
  Index repeats() const;
  Index embed_size() const { return sparse_embed_size(k, eps); }
  void validate() const;
};

// Work counters of the sparse kernels on the calling thread.
struct KernelCounters {
  std::uint64_t sparse_touches = 0;  // stored entries read by sketch applications
  std::uint64_t peak_dense = 0;      // largest dense intermediate, in words
  void reset() { *this = {}; }
};
KernelCounters& kernel_counters();

// Right factor Z (n x k, orthonormal) with ||A - A Z Z^T||_F^2 <= (1+eps) tail with constant probability.
DenseMatrix sparse_svd(const SparseColMatrix& A, Index k, double eps, std::uint64_t seed);

// Seed of candidate i in sparse_svd_boosting.
std::uint64_t boost_sub_seed(std::uint64_t seed, Index i);

struct BoostReport {
  DenseMatrix Z;
  Index chosen = 0;
  std::vector<double> scores;  // ||J A - (J A Z_i) Z_i^T||_F^2
};

BoostReport sparse_svd_boosting_report(const SparseColMatrix& A, Index k, double eps, double delta,
                                       std::uint64_t seed, Index repeats = 0);
DenseMatrix sparse_svd_boosting(const SparseColMatrix& A, Index k, double eps, double delta, std::uint64_t seed);

struct SparseBssReport {
  SamplingMatrix S;
  Index chosen = 0;
  std::vector<double> sigma_k_sq;  // per candidate
  std::vector<double> es_frob_sq;  // per candidate, on the unsketched E
  Index sigma_rank = 0;            // 1-based position of the chosen candidate in each sorted list
  Index frob_rank = 0;
  double e_frob_sq = 0.0;
};

// BSS on the sketches W_i E, keeping a candidate ranked in the top ceil(2r/3) of both lists.
SparseBssReport bss_sampling_sparse_report(const DenseMatrix& V, const SparseColMatrix& E, Index ell, double eps,
                                           double delta, std::uint64_t seed, Index repeats = 0);
SamplingMatrix bss_sampling_sparse(const DenseMatrix& V, const SparseColMatrix& E, Index ell, double eps,
                                   double delta, std::uint64_t seed);

// Same with E = A - A Z Z^T given implicitly, V = Z.
SparseBssReport bss_sampling_sparse_residual(const SparseColMatrix& A, const DenseMatrix& Z, Index ell, double eps,
                                             double delta, std::uint64_t seed, Index repeats = 0);

// c = 4k columns of G; constant-factor guarantee with constant probability.
std::vector<Index> deterministic_css_sparse(const SparseColMatrix& G, Index k, Index c, std::uint64_t seed);

// Squared column norms of J (A - Q Q^T A) with J the JLT of stream kJlt and Q = range_basis(V).
Vector jlt_residual_norms(const SparseColMatrix& A, const DenseMatrix& V, std::uint64_t seed);

// Adaptive sampling with probabilities from the JLT of the residual. Sampling uses {seed, kSampling}.
AdaptiveSample adaptive_cols_sparse(const SparseColMatrix& A, const DenseMatrix& V, Index c2, double beta,
                                    std::uint64_t seed);

Index sparse_subspace_size(Index c, double eps);  // ceil(2c^2/eps^2)

// A_block W^T for the sparse embedding W (xi x n) over global columns [offset, offset + cols).
DenseMatrix embed_block_columns(const SparseEmbeddingSpec& spec, const SparseColMatrix& A, Index offset);

// Y^T A W^T with a sparse embedding W; identity when xi >= n.
ApproxSubspace approx_subspace_svd_sparse(const SparseColMatrix& A, const DenseMatrix& V, Index k, double eps,
                                          std::uint64_t seed, Index xi = 0);

struct FastCssParams {
  Index k = 1;
  double eps = 0.5;
  double delta = 0.1;
  Index ell = 0;  // 0 selects 4k
  Index c1 = 0;   // 0 selects 4k
  Index c2 = 0;   // 0 selects ceil(50k/eps)
  Index xi = 0;   // 0 selects ceil(2c^2/eps^2)
  std::uint64_t seed = 0;
  bool parallel = false;

  Index local_count() const { return ell ? ell : 4 * k; }
  Index global_count() const { return c1 ? c1 : 4 * k; }
  Index adaptive_count() const { return c2 ? c2 : ceil_div_real(50.0 * k / eps); }
  Index total_count() const { return global_count() + adaptive_count(); }
  Index sketch_size() const { return xi ? xi : sparse_subspace_size(total_count(), eps); }
  void validate() const;
};

// Local stage of the fast protocol on one block.
LocalSample local_sample_sparse(const SparseColMatrix& Ai, Index k, Index ell, double delta, std::uint64_t seed);

struct FastCssResult {
  std::vector<Index> columns;  // c1 global picks, then the adaptive picks
  std::vector<Index> global_pick;
  DenseMatrix Ctilde;
  OrthoBasis U;
  std::vector<bool> local_all_columns;
  AdaptiveRound adaptive;
  std::uint64_t jlt_seed = 0;
  std::uint64_t agreed_seed = 0;
  Index xi = 0;
  bool identity_embedding = false;
  CommLedger ledger;
};

FastCssResult distributed_css_pca_fast(const Cluster& cluster, const FastCssParams& p);

}  // namespace dpca
