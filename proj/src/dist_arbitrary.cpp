#include "dpca/dist_arbitrary.hpp"

#include <cmath>

namespace dpca {

namespace {

ExactMatrix to_exact(const DenseMatrix& A) {
  ExactMatrix out(A.rows(), A.cols());
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i) out(i, j).add(A(i, j));
  return out;
}

DenseMatrix noise_matrix(Index m, Index n, std::uint64_t seed, double eta) {
  DenseMatrix E(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) E(i, j) = eta * noise_sign(seed, i, j);
  return E;
}

}  // namespace

void ArbProtocolParams::validate() const {
  if (k < 1) throw InputError("k must be at least 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw InputError("eps must lie in (0, 1]");
  if (noise && !(*noise >= 0.0)) throw InputError("noise must be non-negative");
  if (!(rounding >= 0.0)) throw InputError("rounding unit must be non-negative");
  if (left_size() < k || right_size() < k) throw InputError("sketch sizes must be at least k");
  if (affine_size_k() < 1) throw InputError("affine sketch size must be positive");
}

const char* branch_name(ArbBranch b) { return b == ArbBranch::LowRank ? "low-rank" : "smoothed"; }

ArbTransforms::ArbTransforms(Index m, Index n, const ArbProtocolParams& p, std::uint64_t s)
    : seed(s),
      H1(gen_integer_sketch(2 * p.k, m, {s, streams::kRankLeft}, kRankTestBound)),
      H2(gen_integer_sketch(2 * p.k, n, {s, streams::kRankRight}, kRankTestBound).transpose()),
      jl(make_two_sided_sketch(m, n, p.left_size(), p.right_size(), s)),
      left(SrhtSpec::make(p.affine_size_k(), m, {s, streams::kAffineLeft})),
      right(SrhtSpec::make(p.affine_size_k(), n, {s, streams::kAffineRight})) {}

double noise_sign(std::uint64_t seed, Index i, Index j) {
  return prf_sign({seed, streams::kNoise}, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
}

double default_noise(const DenseMatrix& A) {
  const double target = 1e-6 * A.norm() / std::sqrt(static_cast<double>(std::max<Index>(A.size(), 1)));
  if (target <= 0.0) return 0.0;
  return std::exp2(std::floor(std::log2(target)));
}

DenseMatrix round_to_grid(const DenseMatrix& V, double rho) {
  if (rho == 0.0) return V;
  return (V / rho).array().round().matrix() * rho;
}

RankTestOutcome rank_test(Network& net, const ArbTransforms& tr, Index k) {
  const Cluster& c = net.cluster();
  auto parts = net.for_each_machine(
      [&](int i) { return exact_integer_sandwich(tr.H1, c.part(i), tr.H2); });
  RankTestOutcome out;
  out.Z = net.gather_sum(parts, "rank-test").round();
  out.sketch_rank = numeric_rank(out.Z);
  out.rank_at_least_2k = out.sketch_rank == 2 * k;
  return out;
}

DenseMatrix solve_low_rank_core(const DenseMatrix& M, const DenseMatrix& N, const DenseMatrix& L,
                                const DenseMatrix& C, Index k, OrthoBasis& U) {
  DenseMatrix X = rank_constrained_affine_solve(M, N, L, k);
  U = top_left_basis(C * X, k);
  return X;
}

BranchOutput low_rank_protocol(Network& net, const ArbTransforms& tr, const RankTestOutcome& rt, Index k) {
  const Cluster& c = net.cluster();
  auto cparts = net.for_each_machine([&](int i) { return exact_product(c.part(i), tr.H2); });
  DenseMatrix C = net.gather_sum(cparts, "C-up").round();
  if (numeric_rank(C) != rt.sketch_rank) throw RetryWithNewSeed("span certificate failed");
  net.broadcast(C, "C-down");

  struct Sketches {
    DenseMatrix P, Q;
  };
  auto sk = net.for_each_machine([&](int i) {
    DenseMatrix Y = tr.right.apply(c.part(i), Side::Right, true);
    return Sketches{tr.left.apply(Y, Side::Left, true), exact_product(C.transpose(), Y).round()};
  });
  std::vector<ExactMatrix> ps, qs;
  for (auto& s : sk) {
    ps.push_back(to_exact(s.P));
    qs.push_back(to_exact(s.Q));
  }
  // One message per machine carries both blocks.
  net.begin_round();
  ExactMatrix Msum(ps[0].rows(), ps[0].cols()), Lsum(qs[0].rows(), qs[0].cols());
  for (int i = 0; i < net.machines(); ++i) {
    net.send_up(i, static_cast<std::uint64_t>(sk[i].P.size() + sk[i].Q.size()), "sketch-up",
                digest_of(sk[i].P) ^ digest_of(sk[i].Q));
    Msum.add(ps[i]);
    Lsum.add(qs[i]);
  }
  DenseMatrix M = Msum.round(), L = Lsum.round();
  net.broadcast(static_cast<std::uint64_t>(M.size() + L.size()), "sketch-down", digest_of(M) ^ digest_of(L));

  auto bases = net.for_each_machine([&](int) {
    DenseMatrix N = tr.left.apply(C, Side::Left, true);
    OrthoBasis U;
    solve_low_rank_core(M, N, L, C, k, U);
    return U;
  });
  BranchOutput out;
  out.U = bases[0];
  for (const auto& b : bases)
    if (b.Q.rows() != out.U.Q.rows() || b.Q.cols() != out.U.Q.cols() || b.Q != out.U.Q)
      out.machines_agree = false;
  return out;
}

BranchOutput smoothed_protocol(Network& net, const ArbTransforms& tr, Index k, double eta, double rho) {
  const Cluster& c = net.cluster();
  // The noise term of machine 1 is summed exactly as its own addend.
  const DenseMatrix noise = eta == 0.0 ? DenseMatrix() : noise_matrix(c.rows(), c.cols(), tr.seed, eta);
  auto parts = net.for_each_machine([&](int i) {
    ExactMatrix P = exact_sign_sandwich(tr.jl.S, c.part(i), tr.jl.T);
    if (i == 0 && eta != 0.0) P.add(exact_sign_sandwich(tr.jl.S, noise, tr.jl.T));
    return P;
  });
  DenseMatrix core = finish_core(net.gather_sum(parts, "sketch-up"), tr.jl);
  DenseMatrix Vhat = round_to_grid(truncated_svd(core, k).V, rho);
  net.broadcast(Vhat, "V-down");
  const DenseMatrix W = tr.jl.T * Vhat;
  auto xs = net.for_each_machine([&](int i) {
    ExactMatrix X = exact_product(c.part(i), W);
    if (i == 0 && eta != 0.0) X.add(exact_product(noise, W));
    return X;
  });
  DenseMatrix X = net.gather_sum(xs, "X-up").round();
  BranchOutput out;
  out.U = qr_basis(X);
  net.broadcast(out.U.Q, "U-down");
  return out;
}

std::uint64_t arbitrary_ledger_formula(int s, Index m, Index k, Index xi1, Index xi2, Index al, Index ar,
                                       ArbBranch branch, int attempts) {
  const auto S = static_cast<std::uint64_t>(s);
  const auto u = [](Index x) { return static_cast<std::uint64_t>(x); };
  const std::uint64_t rank = S * (4 * u(k) * u(k) + 2);
  const std::uint64_t c_up = S * u(m) * 2 * u(k);
  std::uint64_t total = rank * static_cast<std::uint64_t>(attempts);
  total += c_up * static_cast<std::uint64_t>(attempts - 1);  // failed certificates
  if (branch == ArbBranch::LowRank) {
    const std::uint64_t sk = S * (u(al) * u(ar) + 2 * u(k) * u(ar));
    total += 2 * c_up + 2 * sk;
  } else {
    total += S * (u(xi1) * u(xi2) + u(xi2) * u(k) + 2 * u(m) * u(k));
  }
  return total;
}

ArbResult distributed_pca_arbitrary(const Cluster& cluster, const ArbProtocolParams& p) {
  p.validate();
  if (cluster.kind() != PartitionKind::Arbitrary) throw InputError("arbitrary partition required");
  const Index m = cluster.rows(), n = cluster.cols();
  if (p.k > m || p.k > n) throw InputError("k exceeds matrix dimensions");
  ArbResult res;
  res.noise = p.noise ? *p.noise : default_noise(cluster.total());
  Network net(cluster, p.seed, p.parallel);
  for (int attempt = 1;; ++attempt) {
    res.attempts = attempt;
    res.agreed_seed = net.agree_seed("rank-test");
    ArbTransforms tr(m, n, p, res.agreed_seed);
    res.xi1 = tr.jl.S.rows();
    res.xi2 = tr.jl.T.cols();
    res.affine_left = tr.left.rows();
    res.affine_right = tr.right.rows();
    RankTestOutcome rt = rank_test(net, tr, p.k);
    res.sketch_rank = rt.sketch_rank;
    BranchOutput b;
    try {
      if (rt.rank_at_least_2k) {
        res.branch = ArbBranch::Smoothed;
        b = smoothed_protocol(net, tr, p.k, res.noise, p.rounding);
      } else {
        res.branch = ArbBranch::LowRank;
        b = low_rank_protocol(net, tr, rt, p.k);
      }
    } catch (const RetryWithNewSeed&) {
      if (attempt >= 2) throw;
      continue;
    }
    res.U = std::move(b.U);
    res.machines_agree = b.machines_agree;
    break;
  }
  res.ledger = net.ledger();
  return res;
}

}  // namespace dpca
