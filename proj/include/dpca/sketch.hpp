#pragma once

#include "dpca/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace dpca {

struct SketchSeed {
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;

  SketchSeed with_stream(std::uint32_t s) const { return {seed, s}; }
  bool operator==(const SketchSeed&) const = default;
};

// Stream tags for the transforms used by the protocols. A protocol derives every
// transform from one agreed 64-bit seed and these tags.
namespace streams {
inline constexpr std::uint32_t kLeftJl = 1;
inline constexpr std::uint32_t kRightJl = 2;
inline constexpr std::uint32_t kRankLeft = 3;
inline constexpr std::uint32_t kRankRight = 4;
inline constexpr std::uint32_t kAffineLeft = 5;
inline constexpr std::uint32_t kAffineRight = 6;
inline constexpr std::uint32_t kNoise = 7;
inline constexpr std::uint32_t kRegressionLeft = 8;
inline constexpr std::uint32_t kRegressionRight = 9;
inline constexpr std::uint32_t kSubspace = 10;
inline constexpr std::uint32_t kJlt = 11;
inline constexpr std::uint32_t kSampling = 12;
inline constexpr std::uint32_t kBoost = 13;
inline constexpr std::uint32_t kBssSketch = 14;
inline constexpr std::uint32_t kTrial = 15;
}  // namespace streams

// Counter-based PRF: a pure function of (seed, stream, i, j).
std::uint64_t prf(const SketchSeed& s, std::uint64_t i, std::uint64_t j);
double prf_sign(const SketchSeed& s, std::uint64_t i, std::uint64_t j);
// Uniform in [0, 1) with 53 random bits.
double prf_uniform(const SketchSeed& s, std::uint64_t i, std::uint64_t j);
// Uniform integer in [0, bound).
std::uint64_t prf_below(const SketchSeed& s, std::uint64_t i, std::uint64_t j, std::uint64_t bound);

enum class Side { Left, Right };

struct SignSketchSpec {
  Index rows = 0;
  Index cols = 0;
  double scale = 1.0;
  SketchSeed seed;

  static SignSketchSpec scaled(Index rows, Index cols, SketchSeed s);
  static SignSketchSpec unit(Index rows, Index cols, SketchSeed s);
  double entry(Index i, Index j) const { return scale * prf_sign(seed, i, j); }
};

DenseMatrix gen_sign_sketch(const SignSketchSpec& spec);

// Integer entries uniform in [-bound, bound], a pure function of (seed, i, j).
DenseMatrix gen_integer_sketch(Index rows, Index cols, const SketchSeed& seed, std::int64_t bound);

struct SrhtSpec {
  Index xi = 0;
  Index m = 0;
  Index m_pad = 0;
  SketchSeed sign_seed;
  SketchSeed row_seed;

  // Requested xi above m_pad is clamped to m_pad.
  static SrhtSpec make(Index xi, Index m, SketchSeed base);
};

// T = sqrt(m_pad/xi) * R * H * D. The unscaled form drops the 1/sqrt(xi) factor,
// leaving entries in {+1, -1}.
class Srht {
 public:
  explicit Srht(const SrhtSpec& spec);

  const SrhtSpec& spec() const { return spec_; }
  Index rows() const { return spec_.xi; }
  double scale() const;
  const std::vector<Index>& sampled_rows() const { return rows_; }
  double sign(Index i) const { return d_[i]; }
  // Unscaled entry (r, i) of T.
  double entry(Index r, Index i) const;

  // Left: T * A (A has m rows). Right: A * T^T (A has m columns).
  DenseMatrix apply(const DenseMatrix& A, Side side, bool unscaled = false) const;
  DenseMatrix dense(bool unscaled = false) const;

 private:
  SrhtSpec spec_;
  std::vector<Index> rows_;
  std::vector<double> d_;
};

DenseMatrix srht_apply(const SrhtSpec& spec, const DenseMatrix& A, Side side);

// In-place unnormalized fast Walsh-Hadamard transform of a power-of-two length vector.
void fwht(double* x, Index n);

struct SparseEmbeddingSpec {
  Index xi = 0;
  Index n = 0;
  SketchSeed seed;

  Index bucket(Index j) const;
  double sign(Index j) const { return prf_sign(seed, static_cast<std::uint64_t>(j), 1); }
  DenseMatrix dense() const;
};

// Left: W * A (A has n rows). Right: A * W^T (A has n columns).
DenseMatrix sparse_embed_apply(const SparseEmbeddingSpec& spec, const DenseMatrix& A, Side side);
DenseMatrix sparse_embed_apply(const SparseEmbeddingSpec& spec, const SparseColMatrix& A, Side side);
// Right application on a sparse input keeping the output sparse.
SparseColMatrix sparse_embed_right_sparse(const SparseEmbeddingSpec& spec, const SparseColMatrix& A);

struct JltSpec {
  Index r = 0;
  Index m = 0;
  SketchSeed seed;

  // r = ceil((4 + 2 beta) / ((1/2)^2 - (1/2)^3) * ln n)
  static JltSpec make(Index n, double beta, Index m, SketchSeed s);
};

DenseMatrix jlt_apply(const JltSpec& spec, const DenseMatrix& B);
DenseMatrix jlt_apply(const JltSpec& spec, const SparseColMatrix& B);

nlohmann::json to_json(const SketchSeed& s);
nlohmann::json to_json(const SignSketchSpec& s);
nlohmann::json to_json(const SrhtSpec& s);
nlohmann::json to_json(const SparseEmbeddingSpec& s);
nlohmann::json to_json(const JltSpec& s);

// Default sketch sizes.
Index jl_size(Index k, double eps);          // ceil(4k/eps^2)
Index regression_size(Index k, double eps);  // ceil(10k/eps)
Index affine_size(Index r, double eps);      // ceil(8r/eps^2)
Index sparse_embed_size(Index k, double eps);  // ceil(2k^2/eps^2)
Index ceil_div_real(double x);

}  // namespace dpca
