#include "dpca/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace dpca {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Index next_pow2(Index m) {
  Index p = 1;
  while (p < m) p <<= 1;
  return p;
}

}  // namespace

std::uint64_t prf(const SketchSeed& s, std::uint64_t i, std::uint64_t j) {
  std::uint64_t h = mix(s.seed ^ mix(0x5bd1e995ull + s.stream));
  h = mix(h ^ i);
  h = mix(h ^ (j * 0xd6e8feb86659fd93ull));
  return h;
}

double prf_sign(const SketchSeed& s, std::uint64_t i, std::uint64_t j) {
  return (prf(s, i, j) >> 63) ? -1.0 : 1.0;
}

double prf_uniform(const SketchSeed& s, std::uint64_t i, std::uint64_t j) {
  return static_cast<double>(prf(s, i, j) >> 11) * 0x1.0p-53;
}

std::uint64_t prf_below(const SketchSeed& s, std::uint64_t i, std::uint64_t j, std::uint64_t bound) {
  const unsigned __int128 wide = static_cast<unsigned __int128>(prf(s, i, j)) * bound;
  return static_cast<std::uint64_t>(wide >> 64);
}

Index ceil_div_real(double x) { return static_cast<Index>(std::ceil(x - 1e-9)); }
Index jl_size(Index k, double eps) { return ceil_div_real(4.0 * k / (eps * eps)); }
Index regression_size(Index k, double eps) { return ceil_div_real(10.0 * k / eps); }
Index affine_size(Index r, double eps) { return ceil_div_real(8.0 * r / (eps * eps)); }
Index sparse_embed_size(Index k, double eps) {
  return ceil_div_real(2.0 * static_cast<double>(k * k) / (eps * eps));
}

SignSketchSpec SignSketchSpec::scaled(Index rows, Index cols, SketchSeed s) {
  return {rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)), s};
}

SignSketchSpec SignSketchSpec::unit(Index rows, Index cols, SketchSeed s) {
  return {rows, cols, 1.0, s};
}

DenseMatrix gen_sign_sketch(const SignSketchSpec& spec) {
  if (spec.rows < 1) throw InputError("sign sketch: needs at least one row");
  DenseMatrix S(spec.rows, spec.cols);
  for (Index j = 0; j < spec.cols; ++j)
    for (Index i = 0; i < spec.rows; ++i) S(i, j) = spec.entry(i, j);
  return S;
}

DenseMatrix gen_integer_sketch(Index rows, Index cols, const SketchSeed& seed, std::int64_t bound) {
  if (rows < 1 || bound < 1) throw InputError("integer sketch: bad shape or bound");
  const auto width = static_cast<std::uint64_t>(2 * bound + 1);
  DenseMatrix S(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      S(i, j) = static_cast<double>(static_cast<std::int64_t>(prf_below(seed, i, j, width)) - bound);
  return S;
}

void fwht(double* x, Index n) {
  for (Index h = 1; h < n; h <<= 1)
    for (Index i = 0; i < n; i += 2 * h)
      for (Index j = i; j < i + h; ++j) {
        const double a = x[j], b = x[j + h];
        x[j] = a + b;
        x[j + h] = a - b;
      }
}

SrhtSpec SrhtSpec::make(Index xi, Index m, SketchSeed base) {
  if (xi < 1 || m < 1) throw InputError("srht: sizes must be positive");
  SrhtSpec s;
  s.m = m;
  s.m_pad = next_pow2(m);
  s.xi = std::min(xi, s.m_pad);
  s.sign_seed = base;
  s.row_seed = {base.seed, base.stream ^ 0x80000000u};
  return s;
}

Srht::Srht(const SrhtSpec& spec) : spec_(spec) {
  d_.resize(static_cast<std::size_t>(spec.m_pad));
  for (Index i = 0; i < spec.m_pad; ++i) d_[i] = prf_sign(spec.sign_seed, i, 0);
  std::vector<Index> perm(static_cast<std::size_t>(spec.m_pad));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index t = 0; t < spec.xi; ++t) {
    auto u = static_cast<Index>(prf_below(spec.row_seed, t, 0, spec.m_pad - t));
    std::swap(perm[t], perm[t + u]);
  }
  rows_.assign(perm.begin(), perm.begin() + spec.xi);
  std::sort(rows_.begin(), rows_.end());
}

double Srht::scale() const { return 1.0 / std::sqrt(static_cast<double>(spec_.xi)); }

double Srht::entry(Index r, Index i) const {
  const auto bits = static_cast<std::uint64_t>(rows_[r] & i);
  return (std::popcount(bits) & 1 ? -1.0 : 1.0) * d_[i];
}

DenseMatrix Srht::apply(const DenseMatrix& A, Side side, bool unscaled) const {
  if (side == Side::Right) {
    DenseMatrix At = A.transpose();
    return apply(At, Side::Left, unscaled).transpose();
  }
  if (A.rows() != spec_.m) throw InputError("srht: dimension mismatch");
  const Index n = A.cols();
  DenseMatrix out(spec_.xi, n);
  std::vector<double> buf(static_cast<std::size_t>(spec_.m_pad));
  const double sc = unscaled ? 1.0 : scale();
  for (Index c = 0; c < n; ++c) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (Index i = 0; i < spec_.m; ++i) buf[i] = d_[i] * A(i, c);
    fwht(buf.data(), spec_.m_pad);
    for (Index r = 0; r < spec_.xi; ++r) out(r, c) = buf[rows_[r]];
  }
  if (!unscaled) out *= sc;
  return out;
}

DenseMatrix Srht::dense(bool unscaled) const {
  DenseMatrix T(spec_.xi, spec_.m);
  for (Index r = 0; r < spec_.xi; ++r)
    for (Index i = 0; i < spec_.m; ++i) T(r, i) = entry(r, i);
  if (!unscaled) T *= scale();
  return T;
}

DenseMatrix srht_apply(const SrhtSpec& spec, const DenseMatrix& A, Side side) {
  return Srht(spec).apply(A, side);
}

Index SparseEmbeddingSpec::bucket(Index j) const {
  return static_cast<Index>(prf_below(seed, static_cast<std::uint64_t>(j), 0,
                                      static_cast<std::uint64_t>(xi)));
}

DenseMatrix SparseEmbeddingSpec::dense() const {
  DenseMatrix W = DenseMatrix::Zero(xi, n);
  for (Index j = 0; j < n; ++j) W(bucket(j), j) = sign(j);
  return W;
}

DenseMatrix sparse_embed_apply(const SparseEmbeddingSpec& spec, const DenseMatrix& A, Side side) {
  if (side == Side::Left) {
    if (A.rows() != spec.n) throw InputError("sparse embedding: dimension mismatch");
    DenseMatrix out = DenseMatrix::Zero(spec.xi, A.cols());
    for (Index j = 0; j < spec.n; ++j) {
      const Index b = spec.bucket(j);
      const double s = spec.sign(j);
      for (Index c = 0; c < A.cols(); ++c)
        if (A(j, c) != 0.0) out(b, c) += s * A(j, c);
    }
    return out;
  }
  if (A.cols() != spec.n) throw InputError("sparse embedding: dimension mismatch");
  DenseMatrix out = DenseMatrix::Zero(A.rows(), spec.xi);
  for (Index j = 0; j < spec.n; ++j) {
    const Index b = spec.bucket(j);
    const double s = spec.sign(j);
    for (Index r = 0; r < A.rows(); ++r)
      if (A(r, j) != 0.0) out(r, b) += s * A(r, j);
  }
  return out;
}

DenseMatrix sparse_embed_apply(const SparseEmbeddingSpec& spec, const SparseColMatrix& A, Side side) {
  const auto& S = A.storage();
  if (side == Side::Left) {
    if (A.rows() != spec.n) throw InputError("sparse embedding: dimension mismatch");
    DenseMatrix out = DenseMatrix::Zero(spec.xi, A.cols());
    for (Index c = 0; c < S.outerSize(); ++c)
      for (SparseColMatrix::Storage::InnerIterator it(S, c); it; ++it)
        out(spec.bucket(it.row()), c) += spec.sign(it.row()) * it.value();
    return out;
  }
  if (A.cols() != spec.n) throw InputError("sparse embedding: dimension mismatch");
  DenseMatrix out = DenseMatrix::Zero(A.rows(), spec.xi);
  for (Index j = 0; j < S.outerSize(); ++j) {
    const Index b = spec.bucket(j);
    const double s = spec.sign(j);
    for (SparseColMatrix::Storage::InnerIterator it(S, j); it; ++it) out(it.row(), b) += s * it.value();
  }
  return out;
}

SparseColMatrix sparse_embed_right_sparse(const SparseEmbeddingSpec& spec, const SparseColMatrix& A) {
  if (A.cols() != spec.n) throw InputError("sparse embedding: dimension mismatch");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(A.nnz()));
  const auto& S = A.storage();
  for (Index j = 0; j < S.outerSize(); ++j) {
    const auto b = static_cast<int>(spec.bucket(j));
    const double s = spec.sign(j);
    for (SparseColMatrix::Storage::InnerIterator it(S, j); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), b, s * it.value());
  }
  return SparseColMatrix::from_triplets(A.rows(), spec.xi, t);
}

JltSpec JltSpec::make(Index n, double beta, Index m, SketchSeed s) {
  const double c = (4.0 + 2.0 * beta) / (0.25 - 0.125);
  JltSpec out;
  out.r = std::max<Index>(1, ceil_div_real(c * std::log(static_cast<double>(std::max<Index>(n, 2)))));
  out.m = m;
  out.seed = s;
  return out;
}

DenseMatrix jlt_apply(const JltSpec& spec, const DenseMatrix& B) {
  if (spec.r < 1) throw InputError("jlt: r must be positive");
  if (B.rows() != spec.m) throw InputError("jlt: dimension mismatch");
  return gen_sign_sketch(SignSketchSpec::scaled(spec.r, spec.m, spec.seed)) * B;
}

DenseMatrix jlt_apply(const JltSpec& spec, const SparseColMatrix& B) {
  if (spec.r < 1) throw InputError("jlt: r must be positive");
  if (B.rows() != spec.m) throw InputError("jlt: dimension mismatch");
  DenseMatrix S = gen_sign_sketch(SignSketchSpec::scaled(spec.r, spec.m, spec.seed));
  return (B.storage().transpose() * S.transpose()).transpose();
}

nlohmann::json to_json(const SketchSeed& s) { return {{"seed", s.seed}, {"stream", s.stream}}; }

nlohmann::json to_json(const SignSketchSpec& s) {
  return {{"kind", "sign"}, {"rows", s.rows}, {"cols", s.cols}, {"scale", s.scale}, {"seed", to_json(s.seed)}};
}

nlohmann::json to_json(const SrhtSpec& s) {
  return {{"kind", "srht"},          {"xi", s.xi}, {"m", s.m}, {"m_pad", s.m_pad},
          {"sign_seed", to_json(s.sign_seed)}, {"row_seed", to_json(s.row_seed)}};
}

nlohmann::json to_json(const SparseEmbeddingSpec& s) {
  return {{"kind", "sparse_embedding"}, {"xi", s.xi}, {"n", s.n}, {"seed", to_json(s.seed)}};
}

nlohmann::json to_json(const JltSpec& s) {
  return {{"kind", "jlt"}, {"r", s.r}, {"m", s.m}, {"seed", to_json(s.seed)}};
}

}  // namespace dpca
