#include "dpca/mtx.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace dpca;
using namespace testing_support;

TEST(MatrixMarket, DenseRoundTripIsExact) {
  std::mt19937_64 rng(31);
  DenseMatrix A = gaussian(5, 4, rng) * 1e-3;
  A(0, 0) = 0.1;
  A(1, 1) = 1.0 / 3.0;
  std::stringstream ss;
  write_mtx(ss, A);
  DenseMatrix B = read_mtx_dense(ss);
  EXPECT_TRUE(A == B);
}

TEST(MatrixMarket, SparseRoundTripIsExact) {
  std::mt19937_64 rng(32);
  DenseMatrix D = gaussian(6, 7, rng);
  for (Index k = 0; k < D.size(); ++k)
    if (k % 3) D.data()[k] = 0.0;
  SparseColMatrix A = SparseColMatrix::from_dense(D);
  std::stringstream ss;
  write_mtx(ss, A);
  SparseColMatrix B = read_mtx_sparse(ss);
  EXPECT_TRUE(B.to_dense() == D);
  EXPECT_EQ(B.nnz(), A.nnz());
  EXPECT_EQ(B.max_col_nnz(), A.max_col_nnz());
}

TEST(MatrixMarket, ReadsCoordinateAsDenseAndArrayAsSparse) {
  std::stringstream coord("%%MatrixMarket matrix coordinate real general\n% comment\n2 3 2\n1 1 1.5\n2 3 -2\n");
  DenseMatrix A = read_mtx_dense(coord);
  EXPECT_EQ(A.rows(), 2);
  EXPECT_EQ(A(0, 0), 1.5);
  EXPECT_EQ(A(1, 2), -2.0);
  std::stringstream arr("%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n4\n");
  SparseColMatrix S = read_mtx_sparse(arr);
  EXPECT_EQ(S.nnz(), 2);
  EXPECT_EQ(S.to_dense()(1, 1), 4.0);
}

TEST(MatrixMarket, RejectsMalformedInput) {
  std::stringstream bad1("not a banner\n");
  EXPECT_THROW(read_mtx_dense(bad1), InputError);
  std::stringstream bad2("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n");
  EXPECT_THROW(read_mtx_dense(bad2), InputError);
  std::stringstream bad3("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n");
  EXPECT_THROW(read_mtx_dense(bad3), InputError);
  std::stringstream bad4("%%MatrixMarket matrix array real general\n1 1\nnan\n");
  EXPECT_THROW(read_mtx_dense(bad4), InputError);
}

TEST(SparseColMatrix, Invariants) {
  DenseMatrix D = DenseMatrix::Zero(4, 3);
  D(0, 0) = 1;
  D(3, 0) = 2;
  D(2, 2) = -1;
  SparseColMatrix S = SparseColMatrix::from_dense(D);
  EXPECT_EQ(S.max_col_nnz(), 2);
  EXPECT_EQ(S.col_nnz(1), 0);
  const auto& st = S.storage();
  for (Index j = 0; j < st.outerSize(); ++j) {
    Index last = -1;
    for (SparseColMatrix::Storage::InnerIterator it(st, j); it; ++it) {
      EXPECT_GT(it.row(), last);
      EXPECT_NE(it.value(), 0.0);
      last = it.row();
    }
  }
  SparseColMatrix sub = S.columns({2, 0});
  EXPECT_EQ(sub.to_dense()(2, 0), -1.0);
  EXPECT_EQ(sub.to_dense()(3, 1), 2.0);
}
