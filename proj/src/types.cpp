#include "dpca/types.hpp"

#include <algorithm>
#include <cmath>

namespace dpca {

void require_finite(const DenseMatrix& A, const char* what) {
  if (!A.allFinite()) throw InputError(std::string(what) + ": non-finite entry");
}

SparseColMatrix SparseColMatrix::from_dense(const DenseMatrix& A) {
  require_finite(A, "sparse conversion");
  SparseColMatrix out;
  out.mat_ = A.sparseView(0.0, 0.0);
  out.finalize();
  return out;
}

SparseColMatrix SparseColMatrix::from_triplets(Index rows, Index cols,
                                               const std::vector<Eigen::Triplet<double>>& t) {
  SparseColMatrix out(rows, cols);
  for (const auto& e : t) {
    if (e.row() < 0 || e.row() >= rows || e.col() < 0 || e.col() >= cols)
      throw InputError("sparse entry index out of range");
    if (!std::isfinite(e.value())) throw InputError("sparse entry not finite");
  }
  out.mat_.setFromTriplets(t.begin(), t.end());
  out.finalize();
  return out;
}

SparseColMatrix SparseColMatrix::from_storage(Storage s) {
  SparseColMatrix out;
  out.mat_ = std::move(s);
  out.finalize();
  return out;
}

void SparseColMatrix::finalize() {
  mat_.prune(0.0, 0.0);
  mat_.makeCompressed();
  phi_ = 0;
  for (Index j = 0; j < mat_.cols(); ++j) phi_ = std::max(phi_, col_nnz(j));
}

Index SparseColMatrix::col_nnz(Index j) const {
  return mat_.outerIndexPtr()[j + 1] - mat_.outerIndexPtr()[j];
}

DenseMatrix SparseColMatrix::dense_columns(const std::vector<Index>& idx) const {
  DenseMatrix out = DenseMatrix::Zero(rows(), static_cast<Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c)
    for (Storage::InnerIterator it(mat_, idx[c]); it; ++it) out(it.row(), c) = it.value();
  return out;
}

SparseColMatrix SparseColMatrix::columns(const std::vector<Index>& idx) const {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t c = 0; c < idx.size(); ++c)
    for (Storage::InnerIterator it(mat_, idx[c]); it; ++it)
      t.emplace_back(static_cast<int>(it.row()), static_cast<int>(c), it.value());
  return from_triplets(rows(), static_cast<Index>(idx.size()), t);
}

}  // namespace dpca
