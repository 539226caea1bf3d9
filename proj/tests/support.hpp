#pragma once

#include "dpca/types.hpp"

#include <cstdint>
#include <random>

namespace testing_support {

using dpca::DenseMatrix;
using dpca::Index;

DenseMatrix gaussian(Index m, Index n, std::mt19937_64& rng);
DenseMatrix random_orthonormal(Index m, Index k, std::mt19937_64& rng);
DenseMatrix integer_matrix(Index m, Index n, int lo, int hi, std::mt19937_64& rng);
// Integer matrix of the given rank: sum of r outer products of small integer vectors.
DenseMatrix integer_rank(Index m, Index n, Index r, std::mt19937_64& rng);
// Squared Frobenius norm of A - A_k through an independent eigen-solver on A^T A.
double tail_by_eigs(const DenseMatrix& A, Index k);
double max_abs(const DenseMatrix& A);
double median(std::vector<double> v);

}  // namespace testing_support
