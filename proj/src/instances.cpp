#include "dpca/instances.hpp"

#include "dpca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dpca {

namespace {

DenseMatrix normal_matrix(Index m, Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  DenseMatrix A(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) A(i, j) = d(rng);
  return A;
}

DenseMatrix haar_orthonormal(Index m, Index k, std::mt19937_64& rng) {
  return qr(normal_matrix(m, k, rng)).Y.Q;
}

}  // namespace

double HardDenseSpec::rounding_base() const {
  if (B > 0) return B;
  const double skm = static_cast<double>(s * k * m);
  return skm * skm * skm;
}

void HardDenseSpec::validate() const {
  if (m < 1 || k < 1 || k > m) throw InputError("dense hard instance: need 1 <= k <= m");
  if (s < 2) throw InputError("dense hard instance: need at least two machines");
  if (n < s * m) throw InputError("dense hard instance: need n >= s m");
}

HardDenseInstance gen_dense_hard(const HardDenseSpec& spec, std::uint64_t seed) {
  spec.validate();
  const double B = spec.rounding_base();
  std::mt19937_64 rng(seed);
  HardDenseInstance out;
  out.B = B;
  for (int attempt = 0;; ++attempt) {
    DenseMatrix R = haar_orthonormal(spec.m, spec.k, rng);
    DenseMatrix Rt = (R * B).array().round().matrix() / B;
    const double dev = (Rt.transpose() * Rt - DenseMatrix::Identity(spec.k, spec.k)).cwiseAbs().maxCoeff();
    if (dev <= 2.0 * spec.k / B) {
      out.R = Rt;
      break;
    }
    if (attempt > 1000) throw InternalError("dense hard instance: rounding bound not met");
  }
  std::vector<SparseColMatrix> blocks;
  blocks.push_back(SparseColMatrix::from_dense(out.R));
  for (Index i = 1; i + 1 < spec.s; ++i)
    blocks.push_back(SparseColMatrix::from_dense(DenseMatrix::Identity(spec.m, spec.m) / B));
  const Index t = spec.n - spec.k - (spec.s - 2) * spec.m;
  blocks.push_back(SparseColMatrix(spec.m, t));
  out.cluster = Cluster::column(std::move(blocks));
  const double tail = tail_energy(out.cluster.total(), spec.k);
  if (!(tail < static_cast<double>(spec.s * spec.m) / (B * B)))
    throw InternalError("dense hard instance: tail bound violated");
  return out;
}

void HardCssSpec::validate() const {
  if (k < 1 || phi < 1) throw InputError("css hard instance: need k, phi >= 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw InputError("css hard instance: eps must lie in (0, 1]");
}

SparseColMatrix gen_css_hard(const HardCssSpec& spec) {
  spec.validate();
  const Index rows = (spec.phi + 1) * spec.k, cols = spec.phi * spec.k;
  std::vector<Eigen::Triplet<double>> t;
  for (Index b = 0; b < spec.k; ++b)
    for (Index i = 0; i < spec.phi; ++i) {
      const auto col = static_cast<int>(b * spec.phi + i);
      t.emplace_back(static_cast<int>(b * (spec.phi + 1)), col, 1.0);
      t.emplace_back(static_cast<int>(b * (spec.phi + 1) + i + 1), col, 1.0);
    }
  SparseColMatrix A = SparseColMatrix::from_triplets(rows, cols, t);
  if (!spec.rotate) return A;
  std::mt19937_64 rng(spec.seed);
  const double unit = spec.rotation_unit > 0 ? spec.rotation_unit : 1e-9;
  DenseMatrix L = haar_orthonormal(rows, rows, rng);
  L = (L / unit).array().round().matrix() * unit;
  return SparseColMatrix::from_dense(L * A.to_dense());
}

DenseMatrix gen_lowrank_noise(Index m, Index n, Index k, double noise, std::uint64_t seed) {
  if (k < 0 || k > std::min(m, n)) throw InputError("lowrank instance: need k <= min(m, n)");
  std::mt19937_64 rng(seed);
  DenseMatrix X = normal_matrix(m, k, rng), Y = normal_matrix(n, k, rng);
  DenseMatrix A = X * Y.transpose();
  if (noise != 0.0) A += noise * normal_matrix(m, n, rng);
  return A;
}

SparseColMatrix gen_sparse_lowrank(Index m, Index n, Index k, Index phi, double noise, std::uint64_t seed) {
  if (k < 1 || phi < 3 || phi > m) throw InputError("sparse lowrank instance: need k >= 1 and 3 <= phi <= m");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::uniform_int_distribution<Index> row(0, m - 1), cluster(0, k - 1);
  std::vector<std::vector<std::pair<Index, double>>> centers(static_cast<std::size_t>(k));
  for (auto& c : centers) {
    std::vector<Index> rows(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) rows[static_cast<std::size_t>(i)] = i;
    std::shuffle(rows.begin(), rows.end(), rng);
    for (Index t = 0; t < phi - 2; ++t) c.emplace_back(rows[static_cast<std::size_t>(t)], d(rng));
  }
  std::vector<Eigen::Triplet<double>> t;
  for (Index j = 0; j < n; ++j) {
    const auto& c = centers[static_cast<std::size_t>(cluster(rng))];
    const double a = d(rng);
    for (const auto& [i, v] : c) t.emplace_back(static_cast<int>(i), static_cast<int>(j), a * v);
    for (int r = 0; r < 2; ++r) t.emplace_back(static_cast<int>(row(rng)), static_cast<int>(j), noise * d(rng));
  }
  return SparseColMatrix::from_triplets(m, n, t);
}

}  // namespace dpca
