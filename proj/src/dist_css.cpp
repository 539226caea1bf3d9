#include "dpca/dist_css.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dpca {

namespace {

std::vector<Index> iota_indices(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

SketchSeed machine_seed(std::uint64_t master, int machine) {
  return {prf({master, streams::kSampling}, static_cast<std::uint64_t>(machine) + 1, 0), streams::kSampling};
}

SparseColMatrix sparse_cols(const DenseMatrix& A) { return SparseColMatrix::from_dense(A); }

}  // namespace

void CssProtocolParams::validate() const {
  if (k < 1) throw InputError("k must be at least 1");
  if (!(eps > 0.0 && eps <= 1.0)) throw InputError("eps must lie in (0, 1]");
  if (local_count() <= k || global_count() <= k) throw InputError("ell and c1 must exceed k");
  if (adaptive_count() < 0 || sketch_size() < 1) throw InputError("bad sample or sketch size");
}

LocalSample local_sample(const DenseMatrix& Ai, Index k, Index ell) {
  LocalSample out;
  const Index w = Ai.cols();
  if (w <= ell) {
    out.local = iota_indices(w);
    out.all_columns = true;
    return out;
  }
  const DenseMatrix V = top_left_basis(Ai.transpose(), k).Q;
  const DenseMatrix E = Ai - (Ai * V) * V.transpose();
  out.local = bss_sampling(V, E, ell).index;
  if (static_cast<Index>(out.local.size()) < ell) {
    std::vector<char> used(static_cast<std::size_t>(w), 0);
    for (Index j : out.local) used[static_cast<std::size_t>(j)] = 1;
    for (Index j = 0; j < w && static_cast<Index>(out.local.size()) < ell; ++j)
      if (!used[static_cast<std::size_t>(j)]) out.local.push_back(j);
    std::sort(out.local.begin(), out.local.end());
  }
  return out;
}

std::vector<double> two_level_probabilities(const std::vector<double>& beta,
                                            const std::vector<Vector>& residual_norms) {
  const double bsum = std::accumulate(beta.begin(), beta.end(), 0.0);
  std::vector<double> q;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const double rs = residual_norms[i].sum();
    for (Index j = 0; j < residual_norms[i].size(); ++j)
      q.push_back(bsum > 0 && rs > 0 && beta[i] > 0 ? beta[i] / bsum * residual_norms[i](j) / rs : 0.0);
  }
  return q;
}

std::uint64_t css_fixed_phase_words(int s, Index m, Index k, Index c, Index xi, bool server_computes_u) {
  const auto S = static_cast<std::uint64_t>(s);
  const auto u = [](Index x) { return static_cast<std::uint64_t>(x); };
  std::uint64_t w = S + S + 2 * S + S * u(c) * u(xi);
  w += server_computes_u ? S * u(m) * u(k) : S * u(c) * u(xi);
  return w;
}

std::uint64_t css_ledger_bound(int s, Index m, Index k, Index ell, Index c1, Index c2, Index xi, Index phi,
                               bool server_computes_u) {
  const auto S = static_cast<std::uint64_t>(s);
  const auto col = static_cast<std::uint64_t>(2 * phi + 1);
  const auto u = [](Index x) { return static_cast<std::uint64_t>(x); };
  return S * u(ell) * col + S * u(c1) * col + u(c2) * col + S * u(c2) * col +
         css_fixed_phase_words(s, m, k, c1 + c2, xi, server_computes_u);
}

CssResult distributed_css_pca(const Cluster& cluster, const CssProtocolParams& p) {
  p.validate();
  if (cluster.kind() != PartitionKind::Column) throw InputError("column partition required");
  const int s = cluster.machines();
  const Index m = cluster.rows(), n = cluster.cols(), k = p.k;
  if (k > m || k >= n) throw InputError("k must be below both dimensions");
  Network net(cluster, p.seed, p.parallel);
  CssResult res;
  std::vector<DenseMatrix> blocks;
  for (int i = 0; i < s; ++i) blocks.push_back(cluster.block(i).to_dense());

  // Local column sampling.
  auto locals = net.for_each_machine([&](int i) { return local_sample(blocks[i], k, p.local_count()); });
  net.begin_round();
  std::vector<Index> g_global;
  for (int i = 0; i < s; ++i) {
    net.send_sparse_columns(i, locals[i].local, "local-cols", &g_global);
    res.local_all_columns.push_back(locals[i].all_columns);
  }
  DenseMatrix G(m, static_cast<Index>(g_global.size()));
  {
    Index t = 0;
    for (int i = 0; i < s; ++i)
      for (Index j : locals[i].local) G.col(t++) = blocks[i].col(j);
  }

  // Global column sampling at the server.
  std::vector<Index> pick = G.cols() > p.global_count() ? deterministic_css(G, k, p.global_count())
                                                         : iota_indices(G.cols());
  DenseMatrix C(m, static_cast<Index>(pick.size()));
  for (std::size_t t = 0; t < pick.size(); ++t) {
    C.col(static_cast<Index>(t)) = G.col(pick[t]);
    res.global_pick.push_back(g_global[static_cast<std::size_t>(pick[t])]);
  }
  const SparseColMatrix Csp = sparse_cols(C);
  net.broadcast(sparse_column_words(Csp), "global-cols", digest_of(C));

  // Adaptive sampling.
  auto resid = net.for_each_machine([&](int i) { return residual_column_norms(blocks[i], C); });
  net.begin_round();
  AdaptiveRound& ad = res.adaptive;
  for (int i = 0; i < s; ++i) {
    ad.beta.push_back(residual_beta(resid[i].sum()));
    net.send_up(i, 1, "beta-up");
  }
  const Index c2 = p.adaptive_count();
  ad.t.assign(static_cast<std::size_t>(s), 0);
  if (std::all_of(ad.beta.begin(), ad.beta.end(), [](double b) { return b == 0.0; })) {
    ad.skipped = true;
  } else {
    for (Index i : sample_from_weights(ad.beta, c2, {p.seed, streams::kSampling})) ++ad.t[i];
  }
  net.begin_round();
  for (int i = 0; i < s; ++i) net.send_down(i, 1, "t-down", static_cast<std::uint64_t>(ad.t[i]));
  auto draws = net.for_each_machine([&](int i) {
    if (ad.t[i] == 0) return std::vector<Index>{};
    const Vector& r = resid[i];
    return sample_from_weights(std::vector<double>(r.data(), r.data() + r.size()), ad.t[i], machine_seed(p.seed, i));
  });
  net.begin_round();
  for (int i = 0; i < s; ++i)
    if (!draws[i].empty()) net.send_sparse_columns(i, draws[i], "adaptive", &ad.global);

  DenseMatrix Chat(m, static_cast<Index>(ad.global.size()));
  {
    Index t = 0;
    for (int i = 0; i < s; ++i)
      for (Index j : draws[i]) Chat.col(t++) = blocks[i].col(j);
  }
  res.Ctilde.resize(m, C.cols() + Chat.cols());
  res.Ctilde << C, Chat;
  res.columns = res.global_pick;
  res.columns.insert(res.columns.end(), ad.global.begin(), ad.global.end());

  // Rank-k basis in span(C-tilde).
  net.broadcast(sparse_column_words(sparse_cols(Chat)), "ctilde-down", digest_of(Chat));
  res.agreed_seed = net.agree_seed("seed");
  res.xi = p.sketch_size();
  const DenseMatrix& Ct = res.Ctilde;
  auto H = net.for_each_machine([&](int i) {
    const DenseMatrix CA = Ct.transpose() * cluster.block(i).storage();
    const DenseMatrix W = subspace_sign_block(res.agreed_seed, res.xi, cluster.offset(i), blocks[i].cols());
    return DenseMatrix(CA * W.transpose());
  });
  const DenseMatrix Hsum = net.gather_sum(H, "sketch-up");
  H.clear();
  auto solve = [&]() {
    SpanFactor f = span_factor(Ct);
    const DenseMatrix Xi = pinv(f.Z.transpose()) * Hsum / std::sqrt(static_cast<double>(n));
    OrthoBasis U;
    U.Q = f.Y * top_k_left(Xi, k);
    U.rank_deficient = f.Y.cols() < k;
    return U;
  };
  if (p.server_computes_u) {
    res.U = solve();
    net.broadcast(res.U.Q, "u-down");
  } else {
    net.broadcast(Hsum, "xi-down");
    auto bases = net.for_each_machine([&](int) { return solve(); });
    res.U = bases[0];
    for (const auto& b : bases)
      if (!(b.Q.rows() == res.U.Q.rows() && b.Q.cols() == res.U.Q.cols() && b.Q == res.U.Q))
        res.machines_agree = false;
  }
  res.ledger = net.ledger();
  return res;
}

}  // namespace dpca
