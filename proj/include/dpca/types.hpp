#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpca {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a randomized certificate fails twice in a row.
struct RetryWithNewSeed : ProtocolError {
  using ProtocolError::ProtocolError;
};

struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StreamReplayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SvdFactors {
  DenseMatrix U;
  Vector sigma;
  DenseMatrix V;
};

struct OrthoBasis {
  DenseMatrix Q;
  bool rank_deficient = false;
};

// Column-compressed sparse matrix with a bound on nonzeros per column.
class SparseColMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

  SparseColMatrix() = default;
  SparseColMatrix(Index rows, Index cols) : mat_(rows, cols) {}

  static SparseColMatrix from_dense(const DenseMatrix& A);
  static SparseColMatrix from_triplets(Index rows, Index cols,
                                       const std::vector<Eigen::Triplet<double>>& t);
  static SparseColMatrix from_storage(Storage s);

  Index rows() const { return mat_.rows(); }
  Index cols() const { return mat_.cols(); }
  Index nnz() const { return mat_.nonZeros(); }
  Index col_nnz(Index j) const;
  Index max_col_nnz() const { return phi_; }

  const Storage& storage() const { return mat_; }
  DenseMatrix to_dense() const { return DenseMatrix(mat_); }
  DenseMatrix dense_columns(const std::vector<Index>& idx) const;
  SparseColMatrix columns(const std::vector<Index>& idx) const;

 private:
  void finalize();

  Storage mat_;
  Index phi_ = 0;
};

void require_finite(const DenseMatrix& A, const char* what);

}  // namespace dpca
