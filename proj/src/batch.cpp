#include "dpca/batch.hpp"

#include "dpca/linalg.hpp"

#include <cmath>

namespace dpca {

void BatchParams::validate() const {
  if (k < 1) throw InputError("k must be at least 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw InputError("eps must lie in (0, 1]");
  if (left_size() < k || right_size() < k) throw InputError("sketch sizes must be at least k");
}

TwoSidedSketch make_two_sided_sketch(Index m, Index n, Index xi1, Index xi2, std::uint64_t seed) {
  TwoSidedSketch sk;
  sk.S = gen_sign_sketch(SignSketchSpec::unit(xi1, m, {seed, streams::kLeftJl}));
  sk.T = gen_sign_sketch(SignSketchSpec::unit(xi2, n, {seed, streams::kRightJl})).transpose();
  sk.scale = 1.0 / std::sqrt(static_cast<double>(xi1) * static_cast<double>(xi2));
  return sk;
}

DenseMatrix finish_core(const ExactMatrix& core, const TwoSidedSketch& sk) {
  return core.round() * sk.scale;
}

OrthoBasis batch_low_rank(const DenseMatrix& A, const BatchParams& p) {
  p.validate();
  require_finite(A, "batch_low_rank");
  if (p.k > A.rows()) throw InputError("k exceeds the row count");
  TwoSidedSketch sk = make_two_sided_sketch(A.rows(), A.cols(), p.left_size(), p.right_size(), p.seed);
  DenseMatrix core = finish_core(exact_sign_sandwich(sk.S, A, sk.T), sk);
  DenseMatrix V = truncated_svd(core, p.k).V;
  DenseMatrix W = sk.T * V;
  DenseMatrix X = exact_product(A, W).round();
  return qr_basis(X);
}

}  // namespace dpca
