#pragma once

#include "dpca/harness.hpp"
#include "dpca/types.hpp"

#include <cstdint>

namespace dpca {

struct HardDenseSpec {
  Index m = 0, k = 0, s = 2, n = 0;
  double B = 0.0;  // 0 selects (s k m)^3
  double rounding_base() const;
  void validate() const;
};

struct HardDenseInstance {
  Cluster cluster;
  DenseMatrix R;  // the rounded orthonormal block held by machine 1
  double B = 0.0;
};

// A = (R | I/B | ... | I/B | 0) split column-wise over s machines.
HardDenseInstance gen_dense_hard(const HardDenseSpec& spec, std::uint64_t seed);

struct HardCssSpec {
  Index k = 1, phi = 2;
  double eps = 0.5;
  bool rotate = false;      // apply a rounded random rotation from the left
  double rotation_unit = 0;  // rounding unit of the rotation; 0 selects 1e-9
  std::uint64_t seed = 0;
  void validate() const;
};

// Block diagonal with k blocks of size (phi+1) x phi; column i of a block is e_1 + e_{i+1}.
SparseColMatrix gen_css_hard(const HardCssSpec& spec);

// X Y^T + noise * G with standard normal X (m x k), Y (n x k), G (m x n).
DenseMatrix gen_lowrank_noise(Index m, Index n, Index k, double noise, std::uint64_t seed);

// Sparse rank-k plus noise: column j is a random multiple of one of k sparse centers
// (phi - 2 nonzeros each) plus noise on two random rows, so every column has at most phi nonzeros.
SparseColMatrix gen_sparse_lowrank(Index m, Index n, Index k, Index phi, double noise, std::uint64_t seed);

}  // namespace dpca
