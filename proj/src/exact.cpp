#include "dpca/exact.hpp"

#include <bit>
#include <cmath>

namespace dpca {

namespace {

constexpr std::int64_t kRadix = std::int64_t{1} << 32;
constexpr std::uint64_t kFlushEvery = std::uint64_t{1} << 30;

}  // namespace

void ExactSum::bump(std::uint64_t n) const {
  pending_ += n;
  if (pending_ >= kFlushEvery) normalize();
}

void ExactSum::normalize() const {
  for (int b = 0; b + 1 < kBins; ++b) {
    std::int64_t carry = bins_[b] >> 32;
    bins_[b] -= carry * kRadix;
    bins_[b + 1] += carry;
  }
  pending_ = 0;
}

void ExactSum::add(double x) {
  if (x == 0.0) return;
  const auto bits = std::bit_cast<std::uint64_t>(x);
  const bool neg = bits >> 63;
  const auto e = static_cast<int>((bits >> 52) & 0x7ff);
  if (e == 0x7ff) throw InputError("exact sum: non-finite value");
  std::uint64_t mant = bits & ((std::uint64_t{1} << 52) - 1);
  int off = 0;
  if (e != 0) {
    mant |= std::uint64_t{1} << 52;
    off = e - 1;
  }
  const int bin = off >> 5, sh = off & 31;
  const unsigned __int128 v = static_cast<unsigned __int128>(mant) << sh;
  const auto c0 = static_cast<std::int64_t>(static_cast<std::uint64_t>(v) & 0xffffffffu);
  const auto c1 = static_cast<std::int64_t>(static_cast<std::uint64_t>(v >> 32) & 0xffffffffu);
  const auto c2 = static_cast<std::int64_t>(static_cast<std::uint64_t>(v >> 64));
  if (neg) {
    bins_[bin] -= c0;
    bins_[bin + 1] -= c1;
    bins_[bin + 2] -= c2;
  } else {
    bins_[bin] += c0;
    bins_[bin + 1] += c1;
    bins_[bin + 2] += c2;
  }
  bump(1);
}

void ExactSum::add_product(double a, double b) {
  const double h = a * b;
  if (!std::isfinite(h)) throw InputError("exact sum: product overflow");
  add(h);
  add(std::fma(a, b, -h));
}

void ExactSum::add(const ExactSum& o) {
  if (o.pending_) o.normalize();
  for (int b = 0; b < kBins; ++b) bins_[b] += o.bins_[b];
  bump(1);
}

void ExactSum::sub(const ExactSum& o) {
  if (o.pending_) o.normalize();
  for (int b = 0; b < kBins; ++b) bins_[b] -= o.bins_[b];
  bump(1);
}

bool ExactSum::is_zero() const {
  normalize();
  for (auto b : bins_)
    if (b) return false;
  return true;
}

std::uint64_t ExactSum::digest() const {
  normalize();
  std::uint64_t h = 1469598103934665603ull;
  for (auto b : bins_) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 1099511628211ull;
  }
  return h;
}

double ExactSum::to_double() const {
  normalize();
  std::array<std::int64_t, kBins> w = bins_;
  double sign = 1.0;
  if (w[kBins - 1] < 0) {
    sign = -1.0;
    for (auto& b : w) b = -b;
    for (int b = 0; b + 1 < kBins; ++b) {
      std::int64_t carry = w[b] >> 32;
      w[b] -= carry * kRadix;
      w[b + 1] += carry;
    }
  }
  int h = kBins - 1;
  while (h >= 0 && w[h] == 0) --h;
  if (h < 0) return 0.0;
  auto bit = [&](long pos) -> std::uint64_t {
    return (static_cast<std::uint64_t>(w[pos >> 5]) >> (pos & 31)) & 1u;
  };
  const long p = 32L * h + (63 - std::countl_zero(static_cast<std::uint64_t>(w[h])));
  const long r = p > 52 ? p - 52 : 0;
  std::uint64_t mant = 0;
  for (long i = 0; r + i <= p; ++i) mant |= bit(r + i) << i;
  if (r > 0) {
    const bool half = bit(r - 1);
    bool sticky = false;
    const long below = r - 1;
    const long full_bins = below >> 5;
    for (long b = 0; b < full_bins && !sticky; ++b) sticky = w[b] != 0;
    if (!sticky && (below & 31)) {
      const auto mask = (std::uint64_t{1} << (below & 31)) - 1;
      sticky = (static_cast<std::uint64_t>(w[full_bins]) & mask) != 0;
    }
    if (half && (sticky || (mant & 1u))) ++mant;
  }
  return sign * std::ldexp(static_cast<double>(mant), static_cast<int>(r - 1074));
}

void ExactMatrix::add(const ExactMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw ProtocolError("exact matrix shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i].add(o.data_[i]);
}

DenseMatrix ExactMatrix::round() const {
  DenseMatrix out(rows_, cols_);
  for (Index j = 0; j < cols_; ++j)
    for (Index i = 0; i < rows_; ++i) out(i, j) = (*this)(i, j).to_double();
  return out;
}

ExactMatrix exact_sign_sandwich(const DenseMatrix& S, const DenseMatrix& A, const DenseMatrix& T) {
  if (S.cols() != A.rows() || A.cols() != T.rows()) throw InputError("sandwich: shape mismatch");
  const Index m = A.rows(), n = A.cols(), q = T.cols(), p = S.rows();
  ExactMatrix Y(m, q);
  for (Index c = 0; c < q; ++c)
    for (Index j = 0; j < n; ++j) {
      const bool plus = T(j, c) > 0;
      for (Index i = 0; i < m; ++i) {
        const double a = A(i, j);
        if (a == 0.0) continue;
        if (plus)
          Y(i, c).add(a);
        else
          Y(i, c).sub(a);
      }
    }
  ExactMatrix out(p, q);
  for (Index c = 0; c < q; ++c)
    for (Index i = 0; i < m; ++i) {
      const ExactSum& y = Y(i, c);
      if (y.is_zero()) continue;
      for (Index r = 0; r < p; ++r) {
        if (S(r, i) > 0)
          out(r, c).add(y);
        else
          out(r, c).sub(y);
      }
    }
  return out;
}

ExactMatrix exact_integer_sandwich(const DenseMatrix& S, const DenseMatrix& A, const DenseMatrix& T) {
  if (S.cols() != A.rows() || A.cols() != T.rows()) throw InputError("sandwich: shape mismatch");
  constexpr double kLimit = 0x1p20;
  for (const DenseMatrix* M : {&S, &T})
    for (Index k = 0; k < M->size(); ++k) {
      const double v = M->data()[k];
      if (v != std::trunc(v) || std::abs(v) > kLimit) throw InputError("sandwich: non-integer sketch entry");
    }
  ExactMatrix out(S.rows(), T.cols());
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i) {
      const double a = A(i, j);
      if (a == 0.0) continue;
      for (Index c = 0; c < T.cols(); ++c)
        for (Index r = 0; r < S.rows(); ++r) out(r, c).add_product(a, S(r, i) * T(j, c));
    }
  return out;
}

ExactMatrix exact_product(const DenseMatrix& A, const DenseMatrix& W) {
  if (A.cols() != W.rows()) throw InputError("exact product: shape mismatch");
  ExactMatrix out(A.rows(), W.cols());
  for (Index c = 0; c < W.cols(); ++c)
    for (Index j = 0; j < A.cols(); ++j) {
      const double w = W(j, c);
      if (w == 0.0) continue;
      for (Index i = 0; i < A.rows(); ++i)
        if (A(i, j) != 0.0) out(i, c).add_product(A(i, j), w);
    }
  return out;
}

}  // namespace dpca
