#include "dpca/mtx.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dpca {

namespace {

struct Header {
  bool coordinate = false;
  bool symmetric = false;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("mtx: empty input");
  std::istringstream hs(line);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    throw InputError("mtx: missing %%MatrixMarket matrix banner");
  Header h;
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format == "coordinate")
    h.coordinate = true;
  else if (format != "array")
    throw InputError("mtx: unknown format " + format);
  if (field != "real" && field != "integer" && field != "double")
    throw InputError("mtx: unsupported field " + field);
  if (symmetry == "symmetric")
    h.symmetric = true;
  else if (symmetry != "general")
    throw InputError("mtx: unsupported symmetry " + symmetry);
  return h;
}

std::string next_data_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '%') continue;
    return line;
  }
  throw InputError("mtx: unexpected end of input");
}

double parse_real(const std::string& tok) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw InputError("mtx: bad value '" + tok + "'");
  return v;
}

std::vector<Eigen::Triplet<double>> read_entries(std::istream& in, Index& m, Index& n) {
  Header h = read_header(in);
  std::istringstream size(next_data_line(in));
  std::vector<Eigen::Triplet<double>> t;
  if (h.coordinate) {
    long long q = 0;
    if (!(size >> m >> n >> q) || m < 0 || n < 0 || q < 0) throw InputError("mtx: bad size line");
    t.reserve(static_cast<std::size_t>(q));
    for (long long e = 0; e < q; ++e) {
      std::istringstream ls(next_data_line(in));
      long long i = 0, j = 0;
      std::string v;
      if (!(ls >> i >> j >> v)) throw InputError("mtx: bad entry line");
      if (i < 1 || i > m || j < 1 || j > n) throw InputError("mtx: index out of range");
      double x = parse_real(v);
      t.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), x);
      if (h.symmetric && i != j) t.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), x);
    }
  } else {
    if (!(size >> m >> n) || m < 0 || n < 0) throw InputError("mtx: bad size line");
    for (Index j = 0; j < n; ++j)
      for (Index i = h.symmetric ? j : 0; i < m; ++i) {
        std::istringstream ls(next_data_line(in));
        std::string v;
        ls >> v;
        double x = parse_real(v);
        if (x == 0.0) continue;
        t.emplace_back(static_cast<int>(i), static_cast<int>(j), x);
        if (h.symmetric && i != j) t.emplace_back(static_cast<int>(j), static_cast<int>(i), x);
      }
  }
  return t;
}

}  // namespace

std::string format_real(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

DenseMatrix read_mtx_dense(std::istream& in) {
  Index m = 0, n = 0;
  auto t = read_entries(in, m, n);
  DenseMatrix A = DenseMatrix::Zero(m, n);
  for (const auto& e : t) A(e.row(), e.col()) += e.value();
  return A;
}

SparseColMatrix read_mtx_sparse(std::istream& in) {
  Index m = 0, n = 0;
  auto t = read_entries(in, m, n);
  return SparseColMatrix::from_triplets(m, n, t);
}

DenseMatrix read_mtx_dense_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_mtx_dense(in);
}

SparseColMatrix read_mtx_sparse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_mtx_sparse(in);
}

void write_mtx(std::ostream& out, const DenseMatrix& A) {
  out << "%%MatrixMarket matrix array real general\n" << A.rows() << ' ' << A.cols() << '\n';
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i) out << format_real(A(i, j)) << '\n';
}

void write_mtx(std::ostream& out, const SparseColMatrix& A) {
  out << "%%MatrixMarket matrix coordinate real general\n"
      << A.rows() << ' ' << A.cols() << ' ' << A.nnz() << '\n';
  const auto& S = A.storage();
  for (Index j = 0; j < S.outerSize(); ++j)
    for (SparseColMatrix::Storage::InnerIterator it(S, j); it; ++it)
      out << it.row() + 1 << ' ' << j + 1 << ' ' << format_real(it.value()) << '\n';
}

}  // namespace dpca
