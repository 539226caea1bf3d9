#pragma once

#include "dpca/types.hpp"

#include <iosfwd>
#include <string>

namespace dpca {

// MatrixMarket I/O. Both readers accept the array and the coordinate
// "real general" (or "integer general") layouts. Writers use 17 significant digits.
DenseMatrix read_mtx_dense(std::istream& in);
SparseColMatrix read_mtx_sparse(std::istream& in);
DenseMatrix read_mtx_dense_file(const std::string& path);
SparseColMatrix read_mtx_sparse_file(const std::string& path);

void write_mtx(std::ostream& out, const DenseMatrix& A);
void write_mtx(std::ostream& out, const SparseColMatrix& A);

std::string format_real(double x);

}  // namespace dpca
