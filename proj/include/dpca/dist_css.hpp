#pragma once

#include "dpca/css.hpp"
#include "dpca/harness.hpp"

namespace dpca {

struct CssProtocolParams {
  Index k = 1;
  double eps = 0.5;
  Index ell = 0;  // 0 selects 4k
  Index c1 = 0;   // 0 selects 4k
  Index c2 = 0;   // 0 selects ceil(50k/eps)
  Index xi = 0;   // 0 selects ceil(8c/eps^2)
  std::uint64_t seed = 0;
  bool parallel = false;
  // false: the server broadcasts Xi and every machine computes Delta itself.
  bool server_computes_u = true;

  Index local_count() const { return ell ? ell : 4 * k; }
  Index global_count() const { return c1 ? c1 : 4 * k; }
  Index adaptive_count() const { return c2 ? c2 : ceil_div_real(50.0 * k / eps); }
  Index total_count() const { return global_count() + adaptive_count(); }
  Index sketch_size() const { return xi ? xi : subspace_sketch_size(total_count(), eps); }
  void validate() const;
};

struct LocalSample {
  std::vector<Index> local;  // column indices inside the block
  bool all_columns = false;  // the block had at most ell columns
};

// BSS on the top-k right singular vectors of the block and its residual.
LocalSample local_sample(const DenseMatrix& Ai, Index k, Index ell);

struct AdaptiveRound {
  std::vector<double> beta;   // per machine
  std::vector<Index> t;       // draws per machine
  std::vector<Index> global;  // sampled global column indices, machine by machine
  bool skipped = false;       // every beta was zero
};

// Two-level probability of column j on machine i: g_i * q_j^i.
std::vector<double> two_level_probabilities(const std::vector<double>& beta,
                                            const std::vector<Vector>& residual_norms);

struct CssResult {
  std::vector<Index> columns;  // global indices of C-tilde: the c1 global picks, then the c2 adaptive picks
  std::vector<Index> global_pick;
  DenseMatrix Ctilde;
  OrthoBasis U;
  bool machines_agree = true;
  std::vector<bool> local_all_columns;
  AdaptiveRound adaptive;
  std::uint64_t agreed_seed = 0;
  Index xi = 0;
  CommLedger ledger;
};

CssResult distributed_css_pca(const Cluster& cluster, const CssProtocolParams& p);

// Words of the data-independent phases (beta-up, t-down, seed, sketch-up, u-down or xi-down).
std::uint64_t css_fixed_phase_words(int s, Index m, Index k, Index c, Index xi, bool server_computes_u);

// Upper bound on the total using phi = max column nnz.
std::uint64_t css_ledger_bound(int s, Index m, Index k, Index ell, Index c1, Index c2, Index xi, Index phi,
                               bool server_computes_u);

}  // namespace dpca
