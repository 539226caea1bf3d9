#include "dpca/css_fast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dpca {

namespace {

void note_dense(Index rows, Index cols) {
  auto& c = kernel_counters();
  c.peak_dense = std::max(c.peak_dense, static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols));
}

void note_touch(const SparseColMatrix& A) { kernel_counters().sparse_touches += static_cast<std::uint64_t>(A.nnz()); }

// W A for a sparse embedding W over the rows of A; A itself when xi >= rows.
DenseMatrix left_embed(const SparseColMatrix& A, Index xi, const SketchSeed& seed) {
  note_touch(A);
  if (xi >= A.rows()) {
    note_dense(A.rows(), A.cols());
    return A.to_dense();
  }
  note_dense(xi, A.cols());
  return sparse_embed_apply(SparseEmbeddingSpec{xi, A.rows(), seed}, A, Side::Left);
}

DenseMatrix jlt_of(const JltSpec& J, const SparseColMatrix& A) {
  note_touch(A);
  note_dense(J.r, A.cols());
  return jlt_apply(J, A);
}

// Q^T A for dense Q and sparse A.
DenseMatrix project_sparse(const DenseMatrix& Q, const SparseColMatrix& A) {
  note_touch(A);
  note_dense(Q.cols(), A.cols());
  return (A.storage().transpose() * Q).transpose();
}

void check_eps(double eps, const char* what) {
  if (!(eps > 0.0 && eps < 1.0)) throw InputError(std::string(what) + ": eps must lie in (0, 1)");
}

void check_delta(double delta, const char* what) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError(std::string(what) + ": delta must lie in (0, 1)");
}

Index repeat_count(double delta) { return static_cast<Index>(std::ceil(std::log2(1.0 / delta) - 1e-12)) + 1; }

std::vector<Index> iota_indices(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

// Fills idx up to c distinct columns, largest e2 first.
void pad_indices(std::vector<Index>& idx, Index width, Index c, const Vector& e2) {
  if (static_cast<Index>(idx.size()) >= c) return;
  std::vector<char> used(static_cast<std::size_t>(width), 0);
  for (Index j : idx) used[static_cast<std::size_t>(j)] = 1;
  std::vector<Index> cand;
  for (Index j = 0; j < width; ++j)
    if (!used[static_cast<std::size_t>(j)]) cand.push_back(j);
  std::stable_sort(cand.begin(), cand.end(), [&](Index a, Index b) { return e2(a) > e2(b); });
  for (Index j : cand) {
    if (static_cast<Index>(idx.size()) == c) break;
    idx.push_back(j);
  }
  std::sort(idx.begin(), idx.end());
}

// Squared column norms of A - (A Z) Z^T without forming it.
Vector implicit_residual_norms(const SparseColMatrix& A, const DenseMatrix& Z) {
  const DenseMatrix AZ = A.storage() * Z;
  note_touch(A);
  note_dense(AZ.rows(), AZ.cols());
  Vector e2(A.cols());
  Vector d(A.rows());
  for (Index j = 0; j < A.cols(); ++j) {
    d.noalias() = -AZ * Z.row(j).transpose();
    for (SparseColMatrix::Storage::InnerIterator it(A.storage(), j); it; ++it) d(it.row()) += it.value();
    e2(j) = d.squaredNorm();
  }
  return e2;
}

template <class Sketch>
SparseBssReport select_bss(const DenseMatrix& V, const Vector& e2, Index ell, double eps, Index r, Sketch&& sketch) {
  SparseBssReport rep;
  rep.e_frob_sq = e2.sum();
  std::vector<SamplingMatrix> cands;
  for (Index i = 0; i < r; ++i) {
    BssReport b = bss_sampling_report(V, sketch(i), ell);
    double es = 0.0;
    for (Index t = 0; t < b.S.count(); ++t) es += b.S.weight[t] * b.S.weight[t] * e2(b.S.index[t]);
    rep.sigma_k_sq.push_back(b.sigma_k_sq);
    rep.es_frob_sq.push_back(es);
    cands.push_back(std::move(b.S));
  }
  std::vector<Index> by_sigma = iota_indices(r), by_frob = iota_indices(r);
  std::stable_sort(by_sigma.begin(), by_sigma.end(),
                   [&](Index a, Index b) { return rep.sigma_k_sq[a] > rep.sigma_k_sq[b]; });
  std::stable_sort(by_frob.begin(), by_frob.end(),
                   [&](Index a, Index b) { return rep.es_frob_sq[a] < rep.es_frob_sq[b]; });
  std::vector<Index> ps(static_cast<std::size_t>(r)), pf(static_cast<std::size_t>(r));
  for (Index t = 0; t < r; ++t) {
    ps[by_sigma[t]] = t + 1;
    pf[by_frob[t]] = t + 1;
  }
  const Index cut = (2 * r + 2) / 3;
  Index best = -1;
  for (Index i = 0; i < r; ++i) {
    if (ps[i] > cut || pf[i] > cut) continue;
    if (best < 0 || std::max(ps[i], pf[i]) < std::max(ps[best], pf[best]) ||
        (std::max(ps[i], pf[i]) == std::max(ps[best], pf[best]) && ps[i] + pf[i] < ps[best] + pf[best]))
      best = i;
  }
  if (best < 0) throw InternalError("bss_sampling_sparse: no candidate in both top lists");
  rep.chosen = best;
  rep.sigma_rank = ps[best];
  rep.frob_rank = pf[best];
  rep.S = std::move(cands[best]);

  const double g = 1.0 - std::sqrt(static_cast<double>(V.cols()) / static_cast<double>(ell));
  const double f = (1.0 + eps) / (1.0 - eps);
  if (!(rep.sigma_k_sq[best] >= g * g * (1.0 - 1e-9)))
    throw InternalError("bss_sampling_sparse: spectral postcondition violated");
  if (!(rep.es_frob_sq[best] <= f * f * rep.e_frob_sq * (1.0 + 1e-12)))
    throw InternalError("bss_sampling_sparse: Frobenius postcondition violated");
  return rep;
}

SketchSeed bss_seed(std::uint64_t seed, Index i) {
  return {prf({seed, streams::kBssSketch}, static_cast<std::uint64_t>(i), 0), streams::kBssSketch};
}

void check_bss_shape(const DenseMatrix& V, Index w, Index ell) {
  if (V.cols() < 1 || ell <= V.cols() || ell > V.rows()) throw InputError("bss_sampling_sparse: need k < ell <= w");
  if (V.rows() != w) throw InputError("bss_sampling_sparse: E must have one column per row of V");
}

}  // namespace

KernelCounters& kernel_counters() {
  thread_local KernelCounters c;
  return c;
}

Index FastParams::repeats() const { return repeat_count(delta); }

void FastParams::validate() const {
  if (k < 1) throw InputError("k must be at least 1");
  check_eps(eps, "fast params");
  check_delta(delta, "fast params");
}

DenseMatrix sparse_svd(const SparseColMatrix& A, Index k, double eps, std::uint64_t seed) {
  const Index m = A.rows(), n = A.cols();
  if (k < 1 || k >= std::min(m, n)) throw InputError("sparse_svd: need 1 <= k < min(m, n)");
  check_eps(eps, "sparse_svd");
  const Index xi = sparse_embed_size(k, eps);
  const DenseMatrix B1 = left_embed(A, xi, {seed, streams::kLeftJl});
  const DenseMatrix Q = range_basis(B1.transpose());
  note_dense(Q.rows(), Q.cols());
  if (Q.cols() <= k) {
    DenseMatrix P = DenseMatrix::Zero(n, std::max<Index>(Q.cols(), 1));
    P.leftCols(Q.cols()) = Q;
    return top_left_basis(P, k).Q;
  }
  const DenseMatrix B2 = left_embed(A, xi, {seed, streams::kRightJl});
  const DenseMatrix M = B2 * Q;
  note_dense(M.rows(), M.cols());
  const DenseMatrix core = top_left_basis(M.transpose(), k).Q;
  DenseMatrix Z = Q * core;
  note_dense(Z.rows(), Z.cols());
  return Z;
}

std::uint64_t boost_sub_seed(std::uint64_t seed, Index i) {
  return prf({seed, streams::kBoost}, static_cast<std::uint64_t>(i), 0);
}

BoostReport sparse_svd_boosting_report(const SparseColMatrix& A, Index k, double eps, double delta,
                                       std::uint64_t seed, Index repeats) {
  check_delta(delta, "sparse_svd_boosting");
  const Index r = repeats ? repeats : repeat_count(delta);
  BoostReport rep;
  const JltSpec J = JltSpec::make(A.cols(), 1.0, A.rows(), {seed, streams::kJlt});
  std::vector<DenseMatrix> cands;
  for (Index i = 0; i < r; ++i) cands.push_back(sparse_svd(A, k, eps, boost_sub_seed(seed, i)));
  const DenseMatrix JA = jlt_of(J, A);
  for (Index i = 0; i < r; ++i) {
    const DenseMatrix& Z = cands[static_cast<std::size_t>(i)];
    rep.scores.push_back((JA - (JA * Z) * Z.transpose()).squaredNorm());
    if (rep.scores.back() < rep.scores[static_cast<std::size_t>(rep.chosen)]) rep.chosen = i;
  }
  rep.Z = std::move(cands[static_cast<std::size_t>(rep.chosen)]);
  return rep;
}

DenseMatrix sparse_svd_boosting(const SparseColMatrix& A, Index k, double eps, double delta, std::uint64_t seed) {
  return sparse_svd_boosting_report(A, k, eps, delta, seed).Z;
}

SparseBssReport bss_sampling_sparse_report(const DenseMatrix& V, const SparseColMatrix& E, Index ell, double eps,
                                           double delta, std::uint64_t seed, Index repeats) {
  check_bss_shape(V, E.cols(), ell);
  check_eps(eps, "bss_sampling_sparse");
  check_delta(delta, "bss_sampling_sparse");
  const Index r = repeats ? repeats : repeat_count(delta);
  const Index xi = sparse_embed_size(V.cols(), eps);
  Vector e2(E.cols());
  for (Index j = 0; j < E.cols(); ++j) {
    double s = 0.0;
    for (SparseColMatrix::Storage::InnerIterator it(E.storage(), j); it; ++it) s += it.value() * it.value();
    e2(j) = s;
  }
  return select_bss(V, e2, ell, eps, r, [&](Index i) { return left_embed(E, xi, bss_seed(seed, i)); });
}

SamplingMatrix bss_sampling_sparse(const DenseMatrix& V, const SparseColMatrix& E, Index ell, double eps,
                                   double delta, std::uint64_t seed) {
  return bss_sampling_sparse_report(V, E, ell, eps, delta, seed).S;
}

SparseBssReport bss_sampling_sparse_residual(const SparseColMatrix& A, const DenseMatrix& Z, Index ell, double eps,
                                             double delta, std::uint64_t seed, Index repeats) {
  check_bss_shape(Z, A.cols(), ell);
  check_eps(eps, "bss_sampling_sparse");
  check_delta(delta, "bss_sampling_sparse");
  const Index r = repeats ? repeats : repeat_count(delta);
  const Index xi = sparse_embed_size(Z.cols(), eps);
  const Vector e2 = implicit_residual_norms(A, Z);
  return select_bss(Z, e2, ell, eps, r, [&](Index i) {
    const DenseMatrix WA = left_embed(A, xi, bss_seed(seed, i));
    return DenseMatrix(WA - (WA * Z) * Z.transpose());
  });
}

std::vector<Index> deterministic_css_sparse(const SparseColMatrix& G, Index k, Index c, std::uint64_t seed) {
  if (k < 1 || c <= k) throw InputError("deterministic_css_sparse: need 1 <= k < c");
  const Index alpha = G.cols();
  if (c >= alpha) return iota_indices(alpha);
  if (k >= G.rows()) throw InputError("deterministic_css_sparse: k must be below the row count");
  const DenseMatrix Z = sparse_svd(G, k, 0.5, prf({seed, streams::kBoost}, 0, 1));
  SparseBssReport rep = bss_sampling_sparse_residual(G, Z, c, 0.5, 0.25, seed);
  std::vector<Index> idx = rep.S.index;
  pad_indices(idx, alpha, c, implicit_residual_norms(G, Z));
  return idx;
}

namespace {

Vector jlt_residual(const JltSpec& J, const SparseColMatrix& A, const DenseMatrix& V) {
  DenseMatrix P = jlt_of(J, A);
  if (V.cols() > 0) {
    const DenseMatrix Q = range_basis(V);
    if (Q.cols() > 0) P -= jlt_apply(J, Q) * project_sparse(Q, A);
  }
  return P.colwise().squaredNorm().transpose();
}

}  // namespace

Vector jlt_residual_norms(const SparseColMatrix& A, const DenseMatrix& V, std::uint64_t seed) {
  if (V.rows() != A.rows()) throw InputError("jlt_residual_norms: row mismatch");
  return jlt_residual(JltSpec::make(A.cols(), 1.0, A.rows(), {seed, streams::kJlt}), A, V);
}

AdaptiveSample adaptive_cols_sparse(const SparseColMatrix& A, const DenseMatrix& V, Index c2, double beta,
                                    std::uint64_t seed) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InputError("adaptive_cols_sparse: beta must lie in (0, 1]");
  if (c2 < 0) throw InputError("adaptive_cols_sparse: negative sample count");
  const Vector r = jlt_residual_norms(A, V, seed);
  AdaptiveSample out;
  if (!(r.sum() > 1e-24 * A.storage().squaredNorm())) {
    out.empty = true;
    return out;
  }
  out.index = sample_from_weights(std::vector<double>(r.data(), r.data() + r.size()), c2,
                                  {seed, streams::kSampling});
  return out;
}

Index sparse_subspace_size(Index c, double eps) { return sparse_embed_size(c, eps); }

DenseMatrix embed_block_columns(const SparseEmbeddingSpec& spec, const SparseColMatrix& A, Index offset) {
  if (offset < 0 || offset + A.cols() > spec.n) throw InputError("sparse embedding: column range outside n");
  note_touch(A);
  note_dense(A.rows(), spec.xi);
  DenseMatrix out = DenseMatrix::Zero(A.rows(), spec.xi);
  for (Index j = 0; j < A.cols(); ++j) {
    const Index b = spec.bucket(offset + j);
    const double s = spec.sign(offset + j);
    for (SparseColMatrix::Storage::InnerIterator it(A.storage(), j); it; ++it) out(it.row(), b) += s * it.value();
  }
  return out;
}

ApproxSubspace approx_subspace_svd_sparse(const SparseColMatrix& A, const DenseMatrix& V, Index k, double eps,
                                          std::uint64_t seed, Index xi) {
  if (k < 1) throw InputError("approx_subspace_svd_sparse: k must be positive");
  if (!(eps > 0.0 && eps <= 1.0)) throw InputError("approx_subspace_svd_sparse: eps must lie in (0, 1]");
  if (V.rows() != A.rows()) throw InputError("approx_subspace_svd_sparse: row mismatch");
  ApproxSubspace out;
  out.xi = std::min(xi ? xi : sparse_subspace_size(V.cols(), eps), A.cols());
  SpanFactor f = span_factor(V);
  out.Y.Q = f.Y;
  out.Y.rank_deficient = f.Y.cols() < k;
  DenseMatrix Xi;
  if (out.xi >= A.cols()) {
    Xi = project_sparse(f.Y, A);
  } else {
    const SparseEmbeddingSpec W{out.xi, A.cols(), {seed, streams::kSubspace}};
    Xi = f.Y.transpose() * embed_block_columns(W, A, 0);
  }
  out.Delta = top_k_left(Xi, k);
  return out;
}

void FastCssParams::validate() const {
  if (k < 1) throw InputError("k must be at least 1");
  check_eps(eps, "fast protocol");
  check_delta(delta, "fast protocol");
  if (local_count() <= k || global_count() <= k) throw InputError("ell and c1 must exceed k");
  if (adaptive_count() < 0 || sketch_size() < 1) throw InputError("bad sample or sketch size");
}

LocalSample local_sample_sparse(const SparseColMatrix& Ai, Index k, Index ell, double delta, std::uint64_t seed) {
  LocalSample out;
  const Index w = Ai.cols();
  if (w <= ell) {
    out.local = iota_indices(w);
    out.all_columns = true;
    return out;
  }
  const DenseMatrix Z = sparse_svd_boosting(Ai, k, 1.0 / 3.0, delta, seed);
  SparseBssReport rep = bss_sampling_sparse_residual(Ai, Z, ell, 0.5, delta, prf({seed, streams::kBssSketch}, 0, 1));
  out.local = rep.S.index;
  pad_indices(out.local, w, ell, implicit_residual_norms(Ai, Z));
  return out;
}

FastCssResult distributed_css_pca_fast(const Cluster& cluster, const FastCssParams& p) {
  p.validate();
  if (cluster.kind() != PartitionKind::Column) throw InputError("column partition required");
  const int s = cluster.machines();
  const Index m = cluster.rows(), n = cluster.cols(), k = p.k;
  if (k >= m || k >= n) throw InputError("k must be below both dimensions");
  Network net(cluster, p.seed, p.parallel);
  FastCssResult res;
  const double delta_i = p.delta / static_cast<double>(s);

  // Local column sampling.
  auto locals = net.for_each_machine([&](int i) {
    const std::uint64_t local_seed = prf({p.seed, streams::kBoost}, static_cast<std::uint64_t>(i) + 1, 0);
    return local_sample_sparse(cluster.block(i), k, p.local_count(), delta_i, local_seed);
  });
  net.begin_round();
  std::vector<Index> g_global;
  std::vector<SparseColMatrix> sent;
  for (int i = 0; i < s; ++i) {
    sent.push_back(net.send_sparse_columns(i, locals[i].local, "local-cols", &g_global));
    res.local_all_columns.push_back(locals[i].all_columns);
  }
  DenseMatrix G(m, static_cast<Index>(g_global.size()));
  {
    Index t = 0;
    for (const auto& b : sent) {
      G.middleCols(t, b.cols()) = b.to_dense();
      t += b.cols();
    }
  }

  // Global column sampling at the server.
  std::vector<Index> pick =
      G.cols() > p.global_count()
          ? deterministic_css_sparse(SparseColMatrix::from_dense(G), k, p.global_count(),
                                     prf({p.seed, streams::kBoost}, 0, 0))
          : iota_indices(G.cols());
  DenseMatrix C(m, static_cast<Index>(pick.size()));
  for (std::size_t t = 0; t < pick.size(); ++t) {
    C.col(static_cast<Index>(t)) = G.col(pick[t]);
    res.global_pick.push_back(g_global[static_cast<std::size_t>(pick[t])]);
  }
  net.broadcast(sparse_column_words(SparseColMatrix::from_dense(C)), "global-cols", digest_of(C));

  // Adaptive sampling on a shared JLT of the residual.
  res.jlt_seed = net.agree_seed("jlt-seed");
  const JltSpec J = JltSpec::make(n, 1.0, m, {res.jlt_seed, streams::kJlt});
  auto resid = net.for_each_machine([&](int i) { return jlt_residual(J, cluster.block(i), C); });
  net.begin_round();
  AdaptiveRound& ad = res.adaptive;
  for (int i = 0; i < s; ++i) {
    ad.beta.push_back(residual_beta(resid[i].sum()));
    net.send_up(i, 1, "beta-up");
  }
  ad.t.assign(static_cast<std::size_t>(s), 0);
  if (std::all_of(ad.beta.begin(), ad.beta.end(), [](double b) { return b == 0.0; })) {
    ad.skipped = true;
  } else {
    for (Index i : sample_from_weights(ad.beta, p.adaptive_count(), {p.seed, streams::kSampling})) ++ad.t[i];
  }
  net.begin_round();
  for (int i = 0; i < s; ++i) net.send_down(i, 1, "t-down", static_cast<std::uint64_t>(ad.t[i]));
  auto draws = net.for_each_machine([&](int i) {
    if (ad.t[i] == 0) return std::vector<Index>{};
    const Vector& r = resid[i];
    const SketchSeed ms{prf({p.seed, streams::kSampling}, static_cast<std::uint64_t>(i) + 1, 0), streams::kSampling};
    return sample_from_weights(std::vector<double>(r.data(), r.data() + r.size()), ad.t[i], ms);
  });
  net.begin_round();
  std::vector<SparseColMatrix> picked;
  for (int i = 0; i < s; ++i)
    if (!draws[i].empty()) picked.push_back(net.send_sparse_columns(i, draws[i], "adaptive", &ad.global));
  DenseMatrix Chat(m, static_cast<Index>(ad.global.size()));
  {
    Index t = 0;
    for (const auto& b : picked) {
      Chat.middleCols(t, b.cols()) = b.to_dense();
      t += b.cols();
    }
  }
  res.Ctilde.resize(m, C.cols() + Chat.cols());
  res.Ctilde << C, Chat;
  res.columns = res.global_pick;
  res.columns.insert(res.columns.end(), ad.global.begin(), ad.global.end());

  // Rank-k basis in span(C-tilde) through a shared sparse embedding.
  net.broadcast(sparse_column_words(SparseColMatrix::from_dense(Chat)), "ctilde-down", digest_of(Chat));
  res.agreed_seed = net.agree_seed("seed");
  res.xi = std::min(p.sketch_size(), n);
  res.identity_embedding = res.xi >= n;
  const DenseMatrix& Ct = res.Ctilde;
  DenseMatrix Hs;
  if (res.identity_embedding) {
    auto H = net.for_each_machine([&](int i) { return DenseMatrix(Ct.transpose() * cluster.block(i).storage()); });
    net.begin_round();
    Hs.resize(Ct.cols(), n);
    for (int i = 0; i < s; ++i) {
      net.send_up(i, static_cast<std::uint64_t>(H[i].size()), "sketch-up", digest_of(H[i]));
      Hs.middleCols(cluster.offset(i), H[i].cols()) = H[i];
    }
  } else {
    const SparseEmbeddingSpec W{res.xi, n, {res.agreed_seed, streams::kSubspace}};
    auto H = net.for_each_machine(
        [&](int i) { return DenseMatrix(Ct.transpose() * embed_block_columns(W, cluster.block(i), cluster.offset(i))); });
    Hs = net.gather_sum(H, "sketch-up");
  }
  SpanFactor f = span_factor(Ct);
  const DenseMatrix Xi = pinv(f.Z.transpose()) * Hs;
  res.U.Q = f.Y * top_k_left(Xi, k);
  res.U.rank_deficient = f.Y.cols() < k;
  net.broadcast(res.U.Q, "u-down");
  res.ledger = net.ledger();
  return res;
}

}  // namespace dpca
