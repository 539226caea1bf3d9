#pragma once

#include "dpca/exact.hpp"
#include "dpca/sketch.hpp"
#include "dpca/types.hpp"

namespace dpca {

struct BatchParams {
  Index k = 1;
  double eps = 0.5;
  Index xi1 = 0;  // 0 selects ceil(4k/eps^2)
  Index xi2 = 0;
  std::uint64_t seed = 0;

  Index left_size() const { return xi1 ? xi1 : jl_size(k, eps); }
  Index right_size() const { return xi2 ? xi2 : jl_size(k, eps); }
  void validate() const;
};

// Unscaled +-1 sketches S (xi1 x m) and T (n x xi2) drawn from one seed.
struct TwoSidedSketch {
  DenseMatrix S;
  DenseMatrix T;
  double scale = 1.0;  // 1 / sqrt(xi1 * xi2)
};

TwoSidedSketch make_two_sided_sketch(Index m, Index n, Index xi1, Index xi2, std::uint64_t seed);

// Rounds the exact S*A*T sum and applies the JL scale.
DenseMatrix finish_core(const ExactMatrix& core, const TwoSidedSketch& sk);

OrthoBasis batch_low_rank(const DenseMatrix& A, const BatchParams& p);

}  // namespace dpca
