#include "dpca/css.hpp"
#include "dpca/instances.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace dpca;
using namespace testing_support;

namespace {

// Independent evaluation of the two dual-set quantities from the dense sampling matrix.
std::pair<double, double> dual_set_values(const DenseMatrix& V, const DenseMatrix& E, const SamplingMatrix& S) {
  DenseMatrix D = S.dense();
  Eigen::JacobiSVD<DenseMatrix> svd(V.transpose() * D);
  const double sk = svd.singularValues()(V.cols() - 1);
  return {sk * sk, (E * D).squaredNorm()};
}

DenseMatrix with_cols(const DenseMatrix& A, const std::vector<Index>& idx) {
  DenseMatrix C(A.rows(), static_cast<Index>(idx.size()));
  for (std::size_t t = 0; t < idx.size(); ++t) C.col(static_cast<Index>(t)) = A.col(idx[t]);
  return C;
}

}  // namespace

TEST(Bss, ZeroResidualExample) {
  DenseMatrix V(2, 1);
  V << 1, 0;
  DenseMatrix E = DenseMatrix::Zero(1, 2);
  SamplingMatrix S = bss_sampling(V, E, 2);
  EXPECT_EQ(S.count(), 2);
  auto [sk, es] = dual_set_values(V, E, S);
  EXPECT_EQ(es, 0.0);
  EXPECT_GE(sk, std::pow(1 - std::sqrt(0.5), 2) - 1e-12);
}

TEST(Bss, PostconditionsOnRandomInstances) {
  std::mt19937_64 rng(81);
  for (int t = 0; t < 100; ++t) {
    const Index w = 40, k = 4, ell = 16;
    DenseMatrix V = random_orthonormal(w, k, rng);
    DenseMatrix E = gaussian(12, w, rng);
    BssReport r = bss_sampling_report(V, E, ell);
    auto [sk, es] = dual_set_values(V, E, r.S);
    EXPECT_GE(sk, 0.25);
    EXPECT_LE(es, E.squaredNorm());
    EXPECT_NEAR(sk, r.sigma_k_sq, 1e-9);
    EXPECT_EQ(r.S.count(), ell);
    std::set<Index> distinct(r.S.index.begin(), r.S.index.end());
    EXPECT_EQ(distinct.size(), r.S.index.size());
    for (double wt : r.S.weight) EXPECT_GT(wt, 0.0);
  }
}

TEST(Bss, GeneralEllBound) {
  std::mt19937_64 rng(82);
  for (Index ell : {3, 5, 9, 20}) {
    DenseMatrix V = random_orthonormal(20, 2, rng);
    DenseMatrix E = gaussian(5, 20, rng);
    auto [sk, es] = dual_set_values(V, E, bss_sampling(V, E, ell));
    const double g = 1 - std::sqrt(2.0 / double(ell));
    EXPECT_GE(sk, g * g * (1 - 1e-9));
    EXPECT_LE(es, E.squaredNorm() * (1 + 1e-12));
  }
}

TEST(Bss, DeterministicAndValidated) {
  std::mt19937_64 rng(83);
  DenseMatrix V = random_orthonormal(15, 3, rng), E = gaussian(4, 15, rng);
  SamplingMatrix a = bss_sampling(V, E, 7), b = bss_sampling(V, E, 7);
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.weight, b.weight);
  EXPECT_THROW(bss_sampling(V, E, 3), InputError);
  EXPECT_THROW(bss_sampling(V, E, 16), InputError);
  EXPECT_THROW(bss_sampling(2 * V, E, 7), InputError);
  EXPECT_THROW(bss_sampling(V, gaussian(4, 14, rng), 7), InputError);
}

TEST(DeterministicCss, ExactRank) {
  std::mt19937_64 rng(84);
  DenseMatrix G = gaussian(10, 2, rng) * gaussian(2, 25, rng);
  auto idx = deterministic_css(G, 2, 3);
  EXPECT_EQ(idx.size(), 3u);
  EXPECT_LE(span_residual(G, with_cols(G, idx)), 1e-8 * G.squaredNorm());
}

TEST(DeterministicCss, FactorAtFourK) { EXPECT_DOUBLE_EQ(css_factor(3, 12), 5.0); }

TEST(DeterministicCss, RandomFactorBound) {
  std::mt19937_64 rng(85);
  for (int t = 0; t < 100; ++t) {
    DenseMatrix G = gaussian(10, 30, rng);
    auto idx = deterministic_css(G, 2, 8);
    EXPECT_EQ(idx.size(), 8u);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    const double ratio = span_residual(G, with_cols(G, idx)) / tail_by_eigs(G, 2);
    EXPECT_LE(ratio, 5.0 + 1e-9);
    EXPECT_EQ(idx, deterministic_css(G, 2, 8));
  }
}

TEST(DeterministicCss, FewColumnsReturnsAll) {
  DenseMatrix G = DenseMatrix::Identity(4, 3);
  auto idx = deterministic_css(G, 1, 5);
  EXPECT_EQ(idx, (std::vector<Index>{0, 1, 2}));
  EXPECT_THROW(deterministic_css(G, 2, 2), InputError);
}

TEST(Adaptive, SingleNonzeroColumn) {
  DenseMatrix A = DenseMatrix::Zero(5, 8);
  A(2, 6) = 3.0;
  A(0, 1) = 1.0;
  DenseMatrix V = DenseMatrix::Zero(5, 1);
  V(0, 0) = 1.0;
  AdaptiveSample s = adaptive_cols(A, V, 50, 1.0, {3, streams::kSampling});
  EXPECT_FALSE(s.empty);
  ASSERT_EQ(s.index.size(), 50u);
  for (Index j : s.index) EXPECT_EQ(j, 6);
}

TEST(Adaptive, ZeroResidualIsEmpty) {
  std::mt19937_64 rng(86);
  DenseMatrix V = gaussian(6, 2, rng);
  DenseMatrix A = V * gaussian(2, 9, rng);
  AdaptiveSample s = adaptive_cols(A, V, 10, 1.0, {1, 1});
  EXPECT_TRUE(s.empty);
  EXPECT_TRUE(s.index.empty());
  EXPECT_THROW(adaptive_cols(A, V, 10, 0.0, {1, 1}), InputError);
}

TEST(Adaptive, UniformFrequencies) {
  const Index n = 10, c2 = 10000;
  DenseMatrix A = DenseMatrix::Identity(n, n);
  AdaptiveSample s = adaptive_cols(A, DenseMatrix::Zero(n, 0), c2, 1.0, {17, streams::kSampling});
  std::vector<int> freq(n, 0);
  for (Index j : s.index) ++freq[j];
  const double p = 1.0 / n, sd = std::sqrt(c2 * p * (1 - p));
  for (int f : freq) EXPECT_LE(std::abs(f - c2 * p), 3 * sd);
}

TEST(Adaptive, ExpectationBound) {
  std::mt19937_64 rng(87);
  const Index k = 3, c2 = 50;
  DenseMatrix A = gaussian(80, 8, rng) * gaussian(8, 120, rng) + 0.3 * gaussian(80, 120, rng);
  DenseMatrix V = A.leftCols(3);
  const double tail = tail_by_eigs(A, k);
  const double psi = span_residual(A, V);
  std::vector<double> vals;
  for (std::uint64_t t = 0; t < 500; ++t) {
    AdaptiveSample s = adaptive_cols(A, V, c2, 1.0, {t, streams::kSampling});
    DenseMatrix C(80, 3 + c2);
    C << V, with_cols(A, s.index);
    vals.push_back(rank_k_span_residual(A, C, k));
  }
  const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  double var = 0;
  for (double v : vals) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (vals.size() - 1) / vals.size());
  EXPECT_LE(mean, tail + double(k) / c2 * psi + 3 * se);
}

TEST(SampleFromWeights, SkipsZeroWeights) {
  std::vector<double> w = {0.0, 2.0, 0.0, 1.0, 0.0};
  auto idx = sample_from_weights(w, 3000, {5, 5});
  int ones = 0;
  for (Index j : idx) {
    EXPECT_TRUE(j == 1 || j == 3);
    ones += j == 1;
  }
  EXPECT_NEAR(ones / 3000.0, 2.0 / 3.0, 0.05);
  EXPECT_THROW(sample_from_weights({0.0, 0.0}, 1, {1, 1}), InputError);
  EXPECT_TRUE(sample_from_weights({0.0}, 0, {1, 1}).empty());
}

TEST(SubspaceSvd, ExactSpan) {
  std::mt19937_64 rng(88);
  DenseMatrix A = gaussian(15, 3, rng) * gaussian(3, 40, rng);
  DenseMatrix V(15, 5);
  V << A.leftCols(3), gaussian(15, 2, rng);
  ApproxSubspace r = approx_subspace_svd(A, V, 3, 0.5, 7);
  EXPECT_EQ(r.xi, 160);
  EXPECT_LE(max_abs(r.Delta.transpose() * r.Delta - DenseMatrix::Identity(3, 3)), 1e-8);
  DenseMatrix U = r.U();
  EXPECT_LE(std::sqrt(projection_residual(A, U)), 1e-6 * A.norm());
}

TEST(SubspaceSvd, RatioAfterSampling) {
  std::vector<double> ratios;
  const Index k = 3;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    DenseMatrix A = gen_lowrank_noise(20, 60, k, 0.1, 4000 + seed);
    auto idx = deterministic_css(A, k, 4 * k);
    DenseMatrix C = with_cols(A, idx);
    AdaptiveSample s = adaptive_cols(A, C, 10, 1.0, {seed, streams::kSampling});
    DenseMatrix Ct(20, C.cols() + 10);
    Ct << C, with_cols(A, s.index);
    ApproxSubspace r = approx_subspace_svd(A, Ct, k, 0.5, seed);
    EXPECT_LE(max_abs(r.Delta.transpose() * r.Delta - DenseMatrix::Identity(k, k)), 1e-8);
    ratios.push_back(projection_residual(A, r.U()) / tail_by_eigs(A, k));
  }
  EXPECT_LE(median(ratios), 1.5);
}

TEST(ResidualBeta, Examples) {
  EXPECT_EQ(residual_beta(0.0), 0.0);
  EXPECT_EQ(residual_beta(1e-30), 0.0);
  EXPECT_EQ(residual_beta(5.0), 8.0);
  EXPECT_EQ(residual_beta(4.0), 4.0);
  EXPECT_EQ(residual_beta(0.3), 0.5);
}

TEST(ResidualBeta, SandwichOnRandomInputs) {
  std::mt19937_64 rng(89);
  std::uniform_int_distribution<int> cols(1, 6);
  for (int t = 0; t < 1000; ++t) {
    DenseMatrix Ai = gaussian(8, cols(rng), rng) * std::exp2(t % 40 - 20);
    DenseMatrix C = gaussian(8, 3, rng);
    ResidualEstimate e = residual_beta(Ai, C, 2);
    EXPECT_EQ(e.machine, 2);
    EXPECT_LE(e.residual, e.beta);
    EXPECT_LE(e.beta, 2 * e.residual);
  }
  DenseMatrix C = DenseMatrix::Identity(4, 4);
  EXPECT_EQ(residual_beta(DenseMatrix::Ones(4, 3), C).beta, 0.0);
}
