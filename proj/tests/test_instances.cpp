#include "dpca/dist_css.hpp"
#include "dpca/instances.hpp"
#include "dpca/linalg.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dpca;
using namespace testing_support;

namespace {

// Error of the best rank-k approximation of A inside the span of the chosen columns, via Gram eigenvalues.
double subset_error(const DenseMatrix& A, const std::vector<Index>& idx, Index k) {
  DenseMatrix C(A.rows(), static_cast<Index>(idx.size()));
  for (std::size_t t = 0; t < idx.size(); ++t) C.col(static_cast<Index>(t)) = A.col(idx[t]);
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(C);
  const DenseMatrix Q = DenseMatrix(qr.householderQ()).leftCols(qr.rank());
  const DenseMatrix P = Q.transpose() * A;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(P * P.transpose());
  const Vector ev = es.eigenvalues().reverse();
  double kept = 0;
  for (Index i = 0; i < std::min<Index>(k, ev.size()); ++i) kept += ev(i);
  return A.squaredNorm() - kept;
}

// Calls f on every subset of {0..n-1} of size r.
template <class F>
void for_each_subset(Index n, Index r, F&& f) {
  std::vector<Index> idx(static_cast<std::size_t>(r));
  for (Index i = 0; i < r; ++i) idx[i] = i;
  while (true) {
    f(idx);
    Index i = r - 1;
    while (i >= 0 && idx[i] == n - r + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (Index j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

double binomial(Index n, Index r) {
  double b = 1;
  for (Index i = 1; i <= r; ++i) b = b * static_cast<double>(n - r + i) / static_cast<double>(i);
  return b;
}

}  // namespace

TEST(CssHard, Structure) {
  HardCssSpec spec;
  spec.k = 3;
  spec.phi = 4;
  spec.eps = 0.5;
  SparseColMatrix A = gen_css_hard(spec);
  ASSERT_EQ(A.rows(), 15);
  ASSERT_EQ(A.cols(), 12);
  const DenseMatrix D = A.to_dense();
  for (Index b = 0; b < 3; ++b)
    for (Index i = 0; i < 4; ++i) {
      Vector want = Vector::Zero(15);
      want(b * 5) = 1;
      want(b * 5 + i + 1) = 1;
      EXPECT_EQ(D.col(b * 4 + i), want);
      EXPECT_EQ(A.col_nnz(b * 4 + i), 2);
    }
}

TEST(CssHard, Rejections) {
  HardCssSpec spec;
  spec.k = 0;
  EXPECT_THROW(gen_css_hard(spec), InputError);
  spec.k = 1;
  spec.eps = 0.0;
  EXPECT_THROW(gen_css_hard(spec), InputError);
}

TEST(CssHard, ExhaustiveSubsets) {
  struct Case {
    Index k, phi;
    double eps;
  };
  for (const Case c : {Case{1, 6, 0.25}, Case{1, 8, 0.25}, Case{2, 8, 0.25}, Case{1, 10, 0.2}, Case{2, 4, 0.5}}) {
    HardCssSpec spec;
    spec.k = c.k;
    spec.phi = c.phi;
    spec.eps = c.eps;
    const DenseMatrix A = gen_css_hard(spec).to_dense();
    const Index r = static_cast<Index>(std::floor(c.k / (2 * c.eps)));
    const Index n = A.cols();
    ASSERT_LE(binomial(n, r), 1e4);
    const double tail = tail_by_eigs(A, c.k);
    int subsets = 0, above = 0;
    for_each_subset(n, r, [&](const std::vector<Index>& idx) {
      ++subsets;
      above += subset_error(A, idx, c.k) > (1 + c.eps) * tail;
    });
    EXPECT_EQ(subsets, static_cast<int>(std::lround(binomial(n, r))));
    EXPECT_EQ(above, subsets) << "k=" << c.k << " phi=" << c.phi << " eps=" << c.eps;
  }
}

TEST(CssHard, RotationKeepsSingularValues) {
  HardCssSpec spec;
  spec.k = 2;
  spec.phi = 4;
  const DenseMatrix A = gen_css_hard(spec).to_dense();
  spec.rotate = true;
  spec.seed = 5;
  const DenseMatrix B = gen_css_hard(spec).to_dense();
  EXPECT_NEAR(tail_by_eigs(B, 2), tail_by_eigs(A, 2), 1e-6);
  EXPECT_GT((A - B).norm(), 1.0);
}

TEST(DenseHard, TailBoundAndRounding) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    HardDenseSpec spec;
    spec.m = 6;
    spec.k = 2;
    spec.s = 3;
    spec.n = 20;
    HardDenseInstance h = gen_dense_hard(spec, seed);
    const double B = std::pow(3.0 * 2 * 6, 3);
    EXPECT_EQ(h.B, B);
    EXPECT_EQ(h.cluster.rows(), 6);
    EXPECT_EQ(h.cluster.cols(), 20);
    EXPECT_EQ(h.cluster.machines(), 3);
    const DenseMatrix A = h.cluster.total();
    EXPECT_LT(tail_by_eigs(A, 2), 3.0 * 6 / (B * B));
    EXPECT_LE(max_abs(h.R.transpose() * h.R - DenseMatrix::Identity(2, 2)), 2.0 * 2 / B);
    EXPECT_LE(max_abs(h.R * B - (h.R * B).array().round().matrix()), 1e-6);
    EXPECT_EQ(max_abs(A.middleCols(2, 6) - DenseMatrix::Identity(6, 6) / B), 0.0);
    EXPECT_EQ(max_abs(A.rightCols(12)), 0.0);
  }
}

TEST(DenseHard, SquareCaseIsNearOrthogonal) {
  HardDenseSpec spec;
  spec.m = 4;
  spec.k = 4;
  spec.s = 2;
  spec.n = 8;
  HardDenseInstance h = gen_dense_hard(spec, 3);
  EXPECT_LE(max_abs(h.R * h.R.transpose() - DenseMatrix::Identity(4, 4)), 1e-3);
}

TEST(DenseHard, ColumnProtocolRecoversSpan) {
  HardDenseSpec spec;
  spec.m = 6;
  spec.k = 2;
  spec.s = 3;
  spec.n = 18;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    HardDenseInstance h = gen_dense_hard(spec, seed);
    CssProtocolParams p;
    p.k = 2;
    p.seed = seed;
    CssResult r = distributed_css_pca(h.cluster, p);
    const DenseMatrix Rq = qr(h.R).Y.Q;
    Eigen::JacobiSVD<DenseMatrix> sv(r.U.Q * r.U.Q.transpose() - Rq * Rq.transpose());
    EXPECT_LE(sv.singularValues()(0), 0.01);
  }
}

TEST(DenseHard, Rejections) {
  HardDenseSpec spec;
  spec.m = 6;
  spec.k = 2;
  spec.s = 3;
  spec.n = 17;
  EXPECT_THROW(gen_dense_hard(spec, 0), InputError);
}

TEST(LowRankNoise, ExactRankAndDeterminism) {
  DenseMatrix A = gen_lowrank_noise(20, 30, 4, 0.0, 9);
  EXPECT_EQ(numeric_rank(A), 4);
  EXPECT_EQ(A, gen_lowrank_noise(20, 30, 4, 0.0, 9));
  EXPECT_NE(A, gen_lowrank_noise(20, 30, 4, 0.0, 10));
  EXPECT_THROW(gen_lowrank_noise(3, 5, 4, 0.0, 1), InputError);
}

TEST(LowRankNoise, TailMatchesNoiseScale) {
  const Index m = 40, n = 60, k = 3;
  const double sigma = 0.1;
  const double want = double(m - k) * double(n - k) * sigma * sigma;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const double tail = tail_by_eigs(gen_lowrank_noise(m, n, k, sigma, seed), k);
    EXPECT_GE(tail, want / 2);
    EXPECT_LE(tail, want * 2);
  }
}

TEST(SparseLowRank, ColumnSparsity) {
  SparseColMatrix A = gen_sparse_lowrank(40, 120, 3, 8, 0.1, 4);
  EXPECT_LE(A.max_col_nnz(), 8);
  EXPECT_EQ(numeric_rank(gen_sparse_lowrank(40, 120, 3, 8, 0.0, 4).to_dense()), 3);
}
