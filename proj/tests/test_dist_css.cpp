#include "dpca/dist_css.hpp"
#include "dpca/instances.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dpca;
using namespace testing_support;

namespace {

CssProtocolParams params(Index k, double eps, std::uint64_t seed) {
  CssProtocolParams p;
  p.k = k;
  p.eps = eps;
  p.seed = seed;
  return p;
}

DenseMatrix gather_columns(const DenseMatrix& A, const std::vector<Index>& idx) {
  DenseMatrix C(A.rows(), static_cast<Index>(idx.size()));
  for (std::size_t t = 0; t < idx.size(); ++t) C.col(static_cast<Index>(t)) = A.col(idx[t]);
  return C;
}

}  // namespace

TEST(LocalSample, ExactRankBlockAndMembership) {
  std::mt19937_64 rng(91);
  DenseMatrix A = gaussian(10, 2, rng) * gaussian(2, 30, rng);
  LocalSample ls = local_sample(A, 2, 8);
  EXPECT_EQ(ls.local.size(), 8u);
  EXPECT_FALSE(ls.all_columns);
  EXPECT_LE(span_residual(A, gather_columns(A, ls.local)), 1e-8 * A.squaredNorm());
  LocalSample z = local_sample(DenseMatrix::Zero(5, 20), 2, 8);
  EXPECT_EQ(z.local.size(), 8u);
  LocalSample small = local_sample(gaussian(5, 6, rng), 2, 8);
  EXPECT_TRUE(small.all_columns);
  EXPECT_EQ(small.local.size(), 6u);
}

TEST(TwoLevel, WithinFactorTwo) {
  std::mt19937_64 rng(92);
  for (int t = 0; t < 50; ++t) {
    std::vector<Vector> r;
    std::vector<double> beta;
    double total = 0;
    for (int i = 0; i < 4; ++i) {
      Vector v = gaussian(7, 1, rng).array().square().matrix();
      if (i == 2 && t % 2) v.setZero();
      r.push_back(v);
      beta.push_back(residual_beta(v.sum()));
      total += v.sum();
    }
    std::vector<double> q = two_level_probabilities(beta, r);
    std::size_t pos = 0;
    for (const auto& v : r)
      for (Index j = 0; j < v.size(); ++j, ++pos) {
        const double p = v(j) / total;
        EXPECT_LE(p / 2, q[pos] + 1e-15);
        EXPECT_LE(q[pos], 2 * p + 1e-15);
      }
  }
}

TEST(DistCss, ExactRankAndCounts) {
  std::mt19937_64 rng(93);
  DenseMatrix A = gaussian(20, 3, rng) * gaussian(3, 80, rng);
  Cluster c = Cluster::split_columns(SparseColMatrix::from_dense(A), 4);
  CssResult r = distributed_css_pca(c, params(3, 0.5, 4));
  EXPECT_TRUE(r.adaptive.skipped);
  EXPECT_EQ(r.columns.size(), 12u);
  EXPECT_LE(std::sqrt(projection_residual(A, r.U.Q)), 1e-6 * A.norm());
  EXPECT_LE(std::sqrt(span_residual(A, r.Ctilde)), 1e-6 * A.norm());
  for (std::size_t t = 0; t < r.columns.size(); ++t)
    EXPECT_TRUE(r.Ctilde.col(static_cast<Index>(t)) == A.col(r.columns[t]));
}

TEST(DistCss, SingleMachineReducesToCss) {
  std::mt19937_64 rng(94);
  DenseMatrix A = gaussian(10, 12, rng);
  Cluster c = Cluster::split_columns(SparseColMatrix::from_dense(A), 1);
  CssProtocolParams p = params(2, 1.0, 3);
  CssResult r = distributed_css_pca(c, p);
  LocalSample ls = local_sample(A, 2, 8);
  auto pick = deterministic_css(gather_columns(A, ls.local), 2, 8);
  std::vector<Index> want;
  for (Index j : pick) want.push_back(ls.local[j]);
  EXPECT_EQ(r.global_pick, want);
}

TEST(DistCss, IdenticalMachinesStillWithinFactor) {
  std::mt19937_64 rng(95);
  DenseMatrix B = gaussian(8, 10, rng);
  DenseMatrix A(8, 30);
  A << B, B, B;
  Cluster c = Cluster::split_columns(SparseColMatrix::from_dense(A), 3);
  CssResult r = distributed_css_pca(c, params(2, 1.0, 1));
  DenseMatrix C = gather_columns(A, r.global_pick);
  EXPECT_LE(span_residual(A, C), 5 * tail_by_eigs(A, 2) + 1e-9);
}

TEST(DistCss, AdaptiveSkippedWhenCovered) {
  DenseMatrix A = DenseMatrix::Zero(6, 20);
  for (Index j = 0; j < 20; ++j) A(j % 3, j) = 1.0 + j;
  Cluster c = Cluster::split_columns(SparseColMatrix::from_dense(A), 2);
  CssResult r = distributed_css_pca(c, params(1, 1.0, 1));
  EXPECT_TRUE(r.adaptive.skipped);
  EXPECT_EQ(r.ledger.phase_total("adaptive"), 0u);
  EXPECT_EQ(r.Ctilde.cols(), 4);
}

TEST(DistCss, SingleResidualMachineGetsAllDraws) {
  std::mt19937_64 rng(96);
  DenseMatrix A = DenseMatrix::Zero(12, 40);
  A.rightCols(20) = gaussian(12, 20, rng);
  Cluster c = Cluster::split_columns(SparseColMatrix::from_dense(A), 2);
  CssResult r = distributed_css_pca(c, params(1, 1.0, 5));
  EXPECT_EQ(r.adaptive.beta[0], 0.0);
  EXPECT_EQ(r.adaptive.t[0], 0);
  EXPECT_EQ(r.adaptive.t[1], 50);
}

TEST(DistCss, EqualResidualsSplitEvenly) {
  std::mt19937_64 rng(97);
  std::vector<double> beta = {4.0, 4.0};
  int first = 0;
  const int draws = 10000;
  for (Index i : sample_from_weights(beta, draws, {11, streams::kSampling})) first += i == 0;
  EXPECT_LE(std::abs(first - draws / 2), 3 * std::sqrt(draws * 0.25));
}

TEST(DistCss, LedgerPhases) {
  SparseColMatrix A = gen_sparse_lowrank(30, 80, 2, 6, 0.1, 3);
  Cluster c = Cluster::split_columns(A, 4);
  CssProtocolParams p = params(2, 1.0, 7);
  CssResult r = distributed_css_pca(c, p);
  const auto& L = r.ledger;
  const Index phi = A.max_col_nnz();
  EXPECT_EQ(L.phase_total("beta-up"), 4u);
  EXPECT_EQ(L.phase_total("t-down"), 4u);
  EXPECT_EQ(L.phase_total("seed"), 8u);
  EXPECT_EQ(L.phase_total("sketch-up"), 4u * std::uint64_t(r.Ctilde.cols() * r.xi));
  EXPECT_EQ(L.phase_total("u-down"), 4u * 30u * 2u);
  EXPECT_LE(L.phase_total("adaptive"), std::uint64_t(p.adaptive_count() * (2 * phi + 1)));
  EXPECT_LE(L.phase_total("local-cols"), 4u * std::uint64_t(8 * (2 * phi + 1)));
  std::uint64_t sum = 0;
  for (const auto& [k, v] : L.phases()) sum += v;
  EXPECT_EQ(sum, L.total());
  EXPECT_LE(L.total(), css_ledger_bound(4, 30, 2, 8, 8, p.adaptive_count(), r.xi, phi, true));
  EXPECT_EQ(L.total() - L.phase_total("local-cols") - L.phase_total("global-cols") - L.phase_total("adaptive") -
                L.phase_total("ctilde-down"),
            css_fixed_phase_words(4, 30, 2, r.Ctilde.cols(), r.xi, true));
}

TEST(DistCss, MachineSolveVariantAgrees) {
  SparseColMatrix A = gen_sparse_lowrank(20, 60, 2, 5, 0.1, 4);
  Cluster c = Cluster::split_columns(A, 3);
  CssProtocolParams p = params(2, 1.0, 2);
  CssResult a = distributed_css_pca(c, p);
  p.server_computes_u = false;
  CssResult b = distributed_css_pca(c, p);
  EXPECT_TRUE(b.machines_agree);
  EXPECT_TRUE(a.U.Q == b.U.Q);
  EXPECT_EQ(b.ledger.phase_total("xi-down"), 3u * std::uint64_t(b.Ctilde.cols() * b.xi));
}

TEST(DistCss, IntermediateBoundAndMonotonicity) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SparseColMatrix As = gen_sparse_lowrank(20, 60, 2, 6, 0.2, 100 + seed);
    DenseMatrix A = As.to_dense();
    Cluster c = Cluster::split_columns(As, 3);
    CssProtocolParams p = params(2, 1.0, seed);
    p.c2 = 10;
    p.xi = 64;
    CssResult r = distributed_css_pca(c, p);
    const double tail = tail_by_eigs(A, 2);
    const double rc = span_residual(A, gather_columns(A, r.global_pick));
    EXPECT_LE(rc, 50 * tail + 1e-9);
    const double rt = span_residual(A, r.Ctilde);
    EXPECT_LE(rt, rank_k_span_residual(A, r.Ctilde, 2) + 1e-9);
    EXPECT_LE(rt, rc + 1e-9);
    EXPECT_LE(rt, projection_residual(A, r.U.Q) + 1e-9);
  }
}

TEST(DistCss, SparseInstanceRatio) {
  std::vector<double> ratios;
  int ctilde_ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SparseColMatrix As = gen_sparse_lowrank(40, 120, 3, 8, 0.1, 200 + seed);
    DenseMatrix A = As.to_dense();
    ASSERT_LE(As.max_col_nnz(), 8);
    CssResult r = distributed_css_pca(Cluster::split_columns(As, 4), params(3, 0.5, seed));
    EXPECT_EQ(r.Ctilde.cols(), 312);
    EXPECT_EQ(r.Ctilde.cols(), 4 * 3 + static_cast<Index>(std::ceil(50 * 3 / 0.5)));
    const double tail = tail_by_eigs(A, 3);
    ratios.push_back(projection_residual(A, r.U.Q) / tail);
    ctilde_ok += span_residual(A, r.Ctilde) <= (1 + 200 * 0.5) * tail;
    EXPECT_LE(r.ledger.phase_total("adaptive"), 300u * 17u);
  }
  EXPECT_LE(median(ratios), 1.5);
  EXPECT_GE(ctilde_ok, 90);
}
