#pragma once

#include "dpca/types.hpp"

#include <array>
#include <cstdint>

namespace dpca {

// Fixed-point accumulator wide enough to hold any finite double exactly.
// Sums are exact and order-independent; to_double() rounds once, to nearest even.
class ExactSum {
 public:
  static constexpr int kBins = 70;

  void add(double x);
  void sub(double x) { add(-x); }
  // Adds a*b exactly (fma split).
  void add_product(double a, double b);
  void add(const ExactSum& o);
  void sub(const ExactSum& o);
  double to_double() const;
  bool is_zero() const;
  // Canonical 64-bit digest of the exact value.
  std::uint64_t digest() const;

 private:
  void normalize() const;
  void bump(std::uint64_t n) const;

  mutable std::array<std::int64_t, kBins> bins_{};
  mutable std::uint64_t pending_ = 0;
};

// Matrix of exact sums, used as the wire format of real-valued words.
class ExactMatrix {
 public:
  ExactMatrix() = default;
  ExactMatrix(Index rows, Index cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  ExactSum& operator()(Index i, Index j) { return data_[j * rows_ + i]; }
  const ExactSum& operator()(Index i, Index j) const { return data_[j * rows_ + i]; }

  void add(const ExactMatrix& o);
  DenseMatrix round() const;

 private:
  Index rows_ = 0, cols_ = 0;
  std::vector<ExactSum> data_;
};

// Exact products with +-1 sign matrices S (p x m) and T (n x q): S * A * T.
ExactMatrix exact_sign_sandwich(const DenseMatrix& S, const DenseMatrix& A, const DenseMatrix& T);
// Exact S * A * T for integer-valued S and T with |entries| <= 2^20.
ExactMatrix exact_integer_sandwich(const DenseMatrix& S, const DenseMatrix& A, const DenseMatrix& T);
// Exact A * W for arbitrary W.
ExactMatrix exact_product(const DenseMatrix& A, const DenseMatrix& W);

}  // namespace dpca
