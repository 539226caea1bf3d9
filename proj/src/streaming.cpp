#include "dpca/streaming.hpp"

#include "dpca/exact.hpp"
#include "dpca/harness.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace dpca {

namespace {

void read_header(std::istream& in, Index& m, Index& n, long long& q) {
  long long mm = 0, nn = 0;
  if (!(in >> mm >> nn >> q)) throw InputError("stream: missing header \"m n q\"");
  if (mm < 1 || nn < 1 || q < 0) throw InputError("stream: bad header");
  m = static_cast<Index>(mm);
  n = static_cast<Index>(nn);
}

StreamUpdate read_update(std::istream& in, Index m, Index n, long long line) {
  long long i = 0, j = 0;
  double x = 0.0;
  if (!(in >> i >> j >> x)) throw InputError("stream: malformed update " + std::to_string(line));
  StreamUpdate u{static_cast<Index>(i - 1), static_cast<Index>(j - 1), x};
  validate_update(u, m, n);
  return u;
}

std::uint64_t mix_update(std::uint64_t h, const StreamUpdate& u) {
  const std::uint64_t words[3] = {static_cast<std::uint64_t>(u.i), static_cast<std::uint64_t>(u.j),
                                  std::bit_cast<std::uint64_t>(u.x)};
  for (std::uint64_t w : words) {
    h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xbf58476d1ce4e5b9ull;
  }
  return h;
}

}  // namespace

void validate_update(const StreamUpdate& u, Index m, Index n) {
  if (u.i < 0 || u.i >= m || u.j < 0 || u.j >= n) throw InputError("stream: update index out of range");
  if (!std::isfinite(u.x)) throw InputError("stream: non-finite update");
}

StreamData read_stream(std::istream& in) {
  StreamData s;
  long long q = 0;
  read_header(in, s.m, s.n, q);
  s.updates.reserve(static_cast<std::size_t>(q));
  for (long long t = 0; t < q; ++t) s.updates.push_back(read_update(in, s.m, s.n, t + 1));
  return s;
}

StreamData read_stream_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("stream: cannot open " + path);
  return read_stream(f);
}

void write_stream(std::ostream& out, const StreamData& s) {
  out << s.m << ' ' << s.n << ' ' << s.updates.size() << '\n';
  out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& u : s.updates) out << u.i + 1 << ' ' << u.j + 1 << ' ' << u.x << '\n';
}

DenseMatrix materialize(const StreamData& s) {
  DenseMatrix A = DenseMatrix::Zero(s.m, s.n);
  for (const auto& u : s.updates) {
    validate_update(u, s.m, s.n);
    A(u.i, u.j) += u.x;
  }
  return A;
}

StreamData stream_from_matrix(const DenseMatrix& A) {
  StreamData s{A.rows(), A.cols(), {}};
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i)
      if (A(i, j) != 0.0) s.updates.push_back({i, j, A(i, j)});
  return s;
}

void VectorSource::replay(const std::function<void(const StreamUpdate&)>& f) {
  for (const auto& u : data_.updates) {
    validate_update(u, data_.m, data_.n);
    f(u);
  }
}

FileSource::FileSource(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) throw InputError("stream: cannot open " + path_);
  long long q = 0;
  read_header(in, m_, n_, q);
}

void FileSource::replay(const std::function<void(const StreamUpdate&)>& f) {
  std::ifstream in(path_);
  if (!in) throw StreamReplayError("stream: cannot reopen " + path_);
  Index m = 0, n = 0;
  long long q = 0;
  read_header(in, m, n, q);
  if (m != m_ || n != n_) throw StreamReplayError("stream: header changed between passes");
  for (long long t = 0; t < q; ++t) f(read_update(in, m, n, t + 1));
}

Index OnePassParams::affine_request() const {
  return ceil_div_real(8.0 * static_cast<double>(k) / (eps * eps * eps));
}

void OnePassParams::validate() const {
  if (k < 1) throw InputError("k must be at least 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw InputError("eps must lie in (0, 1]");
  if (left_regression() < k || right_regression() < k) throw InputError("regression sketches must be at least k");
  if (xi3 < 0 || xi4 < 0) throw InputError("affine sketch sizes must be non-negative");
}

TurnstileSketchState::TurnstileSketchState(Index m, Index n, const OnePassParams& p, bool keep_c)
    : m_(m), n_(n), keep_c_(keep_c) {
  p.validate();
  if (m < 1 || n < 1) throw InputError("stream: empty dimensions");
  const std::uint64_t s = p.seed;
  S_ = gen_sign_sketch(SignSketchSpec::unit(p.left_regression(), m, {s, streams::kRegressionLeft}));
  Rt_ = gen_sign_sketch(SignSketchSpec::unit(p.right_regression(), n, {s, streams::kRegressionRight}));
  Tl_ = Srht(SrhtSpec::make(p.xi3 ? p.xi3 : p.affine_request(), m, {s, streams::kAffineLeft})).dense(true);
  Trt_ = Srht(SrhtSpec::make(p.xi4 ? p.xi4 : p.affine_request(), n, {s, streams::kAffineRight})).dense(true);
  M_ = DenseMatrix::Zero(xi3(), xi4());
  L_ = DenseMatrix::Zero(xi1(), xi4());
  N_ = DenseMatrix::Zero(xi3(), xi2());
  D_ = DenseMatrix::Zero(m, xi2());
  if (keep_c) C_ = DenseMatrix::Zero(xi1(), n);
}

void TurnstileSketchState::update(const StreamUpdate& u) {
  validate_update(u, m_, n_);
  const double x = u.x;
  M_.noalias() += (x * Tl_.col(u.i)) * Trt_.col(u.j).transpose();
  L_.noalias() += (x * S_.col(u.i)) * Trt_.col(u.j).transpose();
  N_.noalias() += (x * Tl_.col(u.i)) * Rt_.col(u.j).transpose();
  D_.row(u.i).noalias() += x * Rt_.col(u.j).transpose();
  if (keep_c_) C_.col(u.j).noalias() += x * S_.col(u.i);
  ++count_;
}

std::uint64_t one_pass_space_words(Index m, Index n, Index xi1, Index xi2, Index xi3, Index xi4, bool keep_c) {
  const auto u = [](Index v) { return static_cast<std::uint64_t>(v); };
  std::uint64_t w = u(xi3) * u(xi4) + u(xi1) * u(xi4) + u(xi3) * u(xi2) + u(m) * u(xi2);
  if (keep_c) w += u(xi1) * u(n);
  return w;
}

std::uint64_t TurnstileSketchState::words() const {
  return static_cast<std::uint64_t>(M_.size() + L_.size() + N_.size() + D_.size() + C_.size());
}

namespace {

SvdFactors solve_one_pass(const TurnstileSketchState& st, Index k) {
  const DenseMatrix X = rank_constrained_affine_solve(st.M(), st.N(), st.L(), k);
  return truncated_svd(X, std::min({k, X.rows(), X.cols()}));
}

}  // namespace

OnePassResult one_pass_finish(const TurnstileSketchState& st, Index k) {
  SvdFactors f = solve_one_pass(st, k);
  OnePassResult r;
  r.U = top_left_basis(st.D() * f.U, k);
  r.space_words = st.words();
  r.xi1 = st.xi1();
  r.xi2 = st.xi2();
  r.xi3 = st.xi3();
  r.xi4 = st.xi4();
  return r;
}

FactorizationResult one_pass_finish_factorization(const TurnstileSketchState& st, Index k) {
  if (!st.keeps_c()) throw InputError("factorization needs the S A sketch");
  SvdFactors f = solve_one_pass(st, k);
  FactorizationResult r;
  r.T = st.D() * f.U;
  r.sigma = f.sigma;
  r.K = f.V.transpose() * st.C();
  r.space_words = st.words();
  return r;
}

OnePassResult one_pass_pca(UpdateSource& src, const OnePassParams& p) {
  if (p.k > src.rows()) throw InputError("k exceeds the row count");
  TurnstileSketchState st(src.rows(), src.cols(), p);
  src.replay([&](const StreamUpdate& u) { st.update(u); });
  return one_pass_finish(st, p.k);
}

FactorizationResult one_pass_factorization(UpdateSource& src, const OnePassParams& p) {
  if (p.k > std::min(src.rows(), src.cols())) throw InputError("k exceeds matrix dimensions");
  TurnstileSketchState st(src.rows(), src.cols(), p, true);
  src.replay([&](const StreamUpdate& u) { st.update(u); });
  return one_pass_finish_factorization(st, p.k);
}

double stream_default_noise(double frob_estimate, Index m, Index n) {
  const double target = 1e-6 * frob_estimate / std::sqrt(static_cast<double>(std::max<Index>(m * n, 1)));
  if (!(target > 0.0)) return 0.0;
  return std::exp2(std::floor(std::log2(target)));
}

TwoPassResult two_pass_pca(UpdateSource& src, const ArbProtocolParams& p) {
  p.validate();
  const Index m = src.rows(), n = src.cols(), k = p.k;
  if (k > m || k > n) throw InputError("k exceeds matrix dimensions");
  TwoPassResult res;
  res.seed = agreed_seed_for(p.seed, 0);
  const ArbTransforms tr(m, n, p, res.seed);
  const DenseMatrix& S = tr.jl.S;  // xi1 x m
  const DenseMatrix& T = tr.jl.T;  // n x xi2
  const DenseMatrix H1t = tr.H1.transpose();  // m x 2k
  const Index xi1 = S.rows(), xi2 = T.cols(), k2 = 2 * k;

  // First pass: rank-test sketch, C = A H2, and S A T, all summed exactly.
  ExactMatrix Z(k2, k2), Cx(m, k2), B(xi1, xi2);
  std::uint64_t digest1 = 0, count1 = 0;
  src.replay([&](const StreamUpdate& u) {
    digest1 = mix_update(digest1, u);
    ++count1;
    for (Index c = 0; c < k2; ++c) {
      const double h2 = tr.H2(u.j, c);
      Cx(u.i, c).add_product(u.x, h2);
      for (Index r = 0; r < k2; ++r) Z(r, c).add_product(u.x, H1t(u.i, r) * h2);
    }
    for (Index q = 0; q < xi2; ++q) {
      const double xt = u.x * T(u.j, q);
      for (Index r = 0; r < xi1; ++r) B(r, q).add(xt * S(r, u.i));
    }
  });
  res.updates = count1;
  res.pass1_words = static_cast<std::uint64_t>(k2 * k2 + m * k2 + xi1 * xi2);
  res.sketch_rank = numeric_rank(Z.round());
  res.branch = res.sketch_rank == k2 ? ArbBranch::Smoothed : ArbBranch::LowRank;

  std::uint64_t digest2 = 0, count2 = 0;
  auto check_replay = [&] {
    if (digest2 != digest1 || count2 != count1) throw StreamReplayError("stream: second pass differs from the first");
  };

  if (res.branch == ArbBranch::Smoothed) {
    res.noise = p.noise ? *p.noise
                        : stream_default_noise(finish_core(B, tr.jl).norm(), m, n);
    const double eta = res.noise;
    if (eta != 0.0) {
      // Noise entries streamed row by row: S (eta N) T.
      for (Index i = 0; i < m; ++i) {
        Vector r = Vector::Zero(xi2);
        for (Index j = 0; j < n; ++j) r += noise_sign(res.seed, i, j) * T.row(j).transpose();
        for (Index q = 0; q < xi2; ++q)
          for (Index a = 0; a < xi1; ++a) B(a, q).add_product(eta, S(a, i) * r(q));
      }
    }
    const DenseMatrix core = finish_core(B, tr.jl);
    const DenseMatrix Vhat = round_to_grid(truncated_svd(core, k).V, p.rounding);
    const DenseMatrix W = T * Vhat;  // n x k
    ExactMatrix X(m, k);
    src.replay([&](const StreamUpdate& u) {
      digest2 = mix_update(digest2, u);
      ++count2;
      for (Index c = 0; c < k; ++c) X(u.i, c).add_product(u.x, W(u.j, c));
    });
    check_replay();
    if (eta != 0.0)
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) {
          const double e = eta * noise_sign(res.seed, i, j);
          for (Index c = 0; c < k; ++c) X(i, c).add_product(e, W(j, c));
        }
    res.pass2_words = static_cast<std::uint64_t>(xi2 * k + m * k);
    res.U = qr_basis(X.round());
    return res;
  }

  const DenseMatrix C = Cx.round();
  if (numeric_rank(C) != res.sketch_rank) throw RetryWithNewSeed("span certificate failed");
  const DenseMatrix N = tr.left.apply(C, Side::Left, true);
  const DenseMatrix Tl = tr.left.dense(true);    // al x m
  const DenseMatrix Trt = tr.right.dense(true);  // ar x n
  DenseMatrix M = DenseMatrix::Zero(Tl.rows(), Trt.rows());
  ExactMatrix L(k2, Trt.rows());
  src.replay([&](const StreamUpdate& u) {
    digest2 = mix_update(digest2, u);
    ++count2;
    M.noalias() += (u.x * Tl.col(u.i)) * Trt.col(u.j).transpose();
    for (Index b = 0; b < Trt.rows(); ++b) {
      const double xt = u.x * Trt(b, u.j);
      for (Index c = 0; c < k2; ++c) L(c, b).add_product(C(u.i, c), xt);
    }
  });
  check_replay();
  res.pass2_words = static_cast<std::uint64_t>(m * k2 + M.size() + k2 * Trt.rows() + N.size());
  solve_low_rank_core(M, N, L.round(), C, k, res.U);
  return res;
}

}  // namespace dpca
