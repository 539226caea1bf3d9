#include "support.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

namespace testing_support {

DenseMatrix gaussian(Index m, Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  DenseMatrix A(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) A(i, j) = d(rng);
  return A;
}

DenseMatrix random_orthonormal(Index m, Index k, std::mt19937_64& rng) {
  Eigen::HouseholderQR<DenseMatrix> qr(gaussian(m, k, rng));
  return qr.householderQ() * DenseMatrix::Identity(m, k);
}

DenseMatrix integer_matrix(Index m, Index n, int lo, int hi, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(lo, hi);
  DenseMatrix A(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) A(i, j) = d(rng);
  return A;
}

DenseMatrix integer_rank(Index m, Index n, Index r, std::mt19937_64& rng) {
  return integer_matrix(m, r, -3, 3, rng) * integer_matrix(r, n, -3, 3, rng);
}

double tail_by_eigs(const DenseMatrix& A, Index k) {
  DenseMatrix G = A.rows() <= A.cols() ? DenseMatrix(A * A.transpose()) : DenseMatrix(A.transpose() * A);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(G);
  Eigen::VectorXd ev = es.eigenvalues();  // ascending
  double t = 0.0;
  const Index p = ev.size();
  for (Index i = 0; i < p - k; ++i) t += std::max(0.0, ev(i));
  return t;
}

double max_abs(const DenseMatrix& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testing_support
