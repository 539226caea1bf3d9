#include "dpca/css.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dpca {

DenseMatrix SamplingMatrix::dense() const {
  DenseMatrix S = DenseMatrix::Zero(width, count());
  for (Index t = 0; t < count(); ++t) S(index[t], t) = weight[t];
  return S;
}

DenseMatrix SamplingMatrix::select(const DenseMatrix& A) const {
  DenseMatrix C(A.rows(), count());
  for (Index t = 0; t < count(); ++t) C.col(t) = A.col(index[t]);
  return C;
}

double css_factor(Index k, Index c) {
  const double g = 1.0 - std::sqrt(static_cast<double>(k) / static_cast<double>(c));
  return 1.0 + 1.0 / (g * g);
}

std::vector<double> bss_barrier_weights(const DenseMatrix& V, const Vector& e2, Index ell) {
  const Index w = V.rows(), k = V.cols();
  const double root = std::sqrt(static_cast<double>(ell) * static_cast<double>(k));
  const double etotal = e2.sum();
  const double deltaU = etotal / (1.0 - std::sqrt(static_cast<double>(k) / static_cast<double>(ell)));
  DenseMatrix Acc = DenseMatrix::Zero(k, k);
  std::vector<double> raw(static_cast<std::size_t>(w), 0.0);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig;
  for (Index tau = 0; tau < ell; ++tau) {
    const double L = static_cast<double>(tau) - root, Lp = L + 1.0;
    eig.compute(Acc);
    const Vector& lam = eig.eigenvalues();
    if (lam.minCoeff() - Lp <= 0.0) throw InternalError("bss: lower barrier crossed");
    const double phi = (lam.array() - L).inverse().sum();
    const double phip = (lam.array() - Lp).inverse().sum();
    const double gap = phip - phi;
    DenseMatrix Y = eig.eigenvectors().transpose() * V.transpose();  // k x w
    const Vector inv1 = (lam.array() - Lp).inverse().matrix();
    const Vector inv2 = inv1.array().square().matrix();
    Index best = -1;
    double best_margin = -1.0, best_l = 0.0, best_u = 0.0;
    for (Index j = 0; j < w; ++j) {
      const Vector y2 = Y.col(j).array().square().matrix();
      const double lval = y2.dot(inv2) / gap - y2.dot(inv1);
      const double uval = deltaU > 0.0 ? e2(j) / deltaU : 0.0;
      const double margin = lval - uval;
      if (lval > 0.0 && margin >= 0.0 && margin > best_margin) {
        best = j;
        best_margin = margin;
        best_l = lval;
        best_u = uval;
      }
    }
    if (best < 0) throw InternalError("bss: no admissible column");
    const double t = 2.0 / (best_l + best_u);
    Acc.noalias() += t * V.row(best).transpose() * V.row(best);
    raw[static_cast<std::size_t>(best)] += t;
  }
  return raw;
}

BssReport bss_finish(const DenseMatrix& V, const Vector& e2, Index ell, const std::vector<double>& raw) {
  const Index w = V.rows(), k = V.cols();
  const double g = 1.0 - std::sqrt(static_cast<double>(k) / static_cast<double>(ell));
  const double scale = g / static_cast<double>(ell);
  const double etotal = e2.sum();
  BssReport rep;
  rep.S.width = w;
  rep.e_frob_sq = etotal;
  std::vector<char> used(static_cast<std::size_t>(w), 0);
  std::vector<std::pair<Index, double>> entries;
  double spent = 0.0;
  for (Index j = 0; j < w; ++j)
    if (raw[static_cast<std::size_t>(j)] > 0.0) {
      const double s = raw[static_cast<std::size_t>(j)] * scale;
      entries.emplace_back(j, std::sqrt(s));
      used[static_cast<std::size_t>(j)] = 1;
      spent += s * e2(j);
    }
  rep.greedy_distinct = static_cast<Index>(entries.size());

  // Pad to ell distinct columns with weights that fit inside the remaining Frobenius budget.
  const Index need = std::min(ell, w) - static_cast<Index>(entries.size());
  if (need > 0) {
    std::vector<Index> cand;
    for (Index j = 0; j < w; ++j)
      if (!used[static_cast<std::size_t>(j)]) cand.push_back(j);
    std::stable_sort(cand.begin(), cand.end(), [&](Index a, Index b) { return e2(a) > e2(b); });
    const double slack = etotal - spent;
    Index added = 0;
    for (Index j : cand) {
      if (added == need) break;
      double wt = 1.0;
      if (e2(j) > 0.0) {
        if (!(slack > 0.0)) continue;
        wt = std::sqrt(slack / (2.0 * static_cast<double>(need) * e2(j)));
        if (!(wt > 0.0) || !std::isfinite(wt)) continue;
      }
      entries.emplace_back(j, wt);
      ++added;
    }
  }
  std::sort(entries.begin(), entries.end());
  for (const auto& [j, wt] : entries) {
    rep.S.index.push_back(j);
    rep.S.weight.push_back(wt);
  }

  DenseMatrix VS(k, rep.S.count());
  rep.es_frob_sq = 0.0;
  for (Index t = 0; t < rep.S.count(); ++t) {
    VS.col(t) = V.row(rep.S.index[t]).transpose() * rep.S.weight[t];
    rep.es_frob_sq += rep.S.weight[t] * rep.S.weight[t] * e2(rep.S.index[t]);
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(VS * VS.transpose(), Eigen::EigenvaluesOnly);
  rep.sigma_k_sq = eig.eigenvalues()(0);
  if (!(rep.sigma_k_sq >= g * g * (1.0 - 1e-9)))
    throw InternalError("bss: spectral postcondition violated");
  if (!(rep.es_frob_sq <= etotal * (1.0 + 1e-12)))
    throw InternalError("bss: Frobenius postcondition violated");
  return rep;
}

BssReport bss_sampling_report(const DenseMatrix& V, const DenseMatrix& E, Index ell) {
  const Index w = V.rows(), k = V.cols();
  if (k < 1 || ell <= k || ell > w) throw InputError("bss: need k < ell <= w");
  if (E.cols() != w) throw InputError("bss: E must have one column per row of V");
  require_finite(V, "bss V");
  require_finite(E, "bss E");
  if ((V.transpose() * V - DenseMatrix::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-8)
    throw InputError("bss: V must have orthonormal columns");
  const Vector e2 = E.colwise().squaredNorm().transpose();
  return bss_finish(V, e2, ell, bss_barrier_weights(V, e2, ell));
}

SamplingMatrix bss_sampling(const DenseMatrix& V, const DenseMatrix& E, Index ell) {
  return bss_sampling_report(V, E, ell).S;
}

std::vector<Index> deterministic_css(const DenseMatrix& G, Index k, Index c) {
  if (k < 1 || c <= k) throw InputError("deterministic_css: need 1 <= k < c");
  require_finite(G, "deterministic_css");
  const Index alpha = G.cols();
  std::vector<Index> idx;
  if (c >= alpha) {
    idx.resize(static_cast<std::size_t>(alpha));
    std::iota(idx.begin(), idx.end(), Index{0});
    return idx;
  }
  const DenseMatrix V = top_left_basis(G.transpose(), k).Q;
  const DenseMatrix E = G - (G * V) * V.transpose();
  SamplingMatrix S = bss_sampling(V, E, c);
  idx = S.index;
  if (static_cast<Index>(idx.size()) < c) {
    std::vector<char> used(static_cast<std::size_t>(alpha), 0);
    for (Index j : idx) used[static_cast<std::size_t>(j)] = 1;
    const Vector e2 = E.colwise().squaredNorm().transpose();
    std::vector<Index> cand;
    for (Index j = 0; j < alpha; ++j)
      if (!used[static_cast<std::size_t>(j)]) cand.push_back(j);
    std::stable_sort(cand.begin(), cand.end(), [&](Index a, Index b) { return e2(a) > e2(b); });
    for (Index j : cand) {
      if (static_cast<Index>(idx.size()) == c) break;
      idx.push_back(j);
    }
    std::sort(idx.begin(), idx.end());
  }
  DenseMatrix C(G.rows(), static_cast<Index>(idx.size()));
  for (std::size_t t = 0; t < idx.size(); ++t) C.col(static_cast<Index>(t)) = G.col(idx[t]);
  const double res = span_residual(G, C);
  const double bound = css_factor(k, c) * tail_energy(G, k);
  if (!(res <= bound + 1e-9 * G.squaredNorm())) throw InternalError("deterministic_css: factor bound violated");
  return idx;
}

std::vector<Index> sample_from_weights(const std::vector<double>& weights, Index count, const SketchSeed& seed) {
  std::vector<double> prefix(weights.size());
  double run = 0.0;
  Index last = -1;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (!(weights[j] >= 0.0) || !std::isfinite(weights[j])) throw InputError("sampling: bad weight");
    run += weights[j];
    prefix[j] = run;
    if (weights[j] > 0.0) last = static_cast<Index>(j);
  }
  if (count > 0 && !(run > 0.0)) throw InputError("sampling: all weights are zero");
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(std::max<Index>(count, 0)));
  for (Index t = 0; t < count; ++t) {
    const double u = prf_uniform(seed, static_cast<std::uint64_t>(t), 0) * run;
    auto it = std::upper_bound(prefix.begin(), prefix.end(), u);
    Index j = it == prefix.end() ? last : static_cast<Index>(it - prefix.begin());
    out.push_back(std::min(j, last));
  }
  return out;
}

Vector residual_column_norms(const DenseMatrix& A, const DenseMatrix& C) {
  if (C.cols() == 0) return A.colwise().squaredNorm().transpose();
  const DenseMatrix Q = range_basis(C);
  const DenseMatrix R = A - Q * (Q.transpose() * A);
  return R.colwise().squaredNorm().transpose();
}

AdaptiveSample adaptive_cols(const DenseMatrix& A, const DenseMatrix& V, Index c2, double beta,
                             const SketchSeed& seed) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InputError("adaptive_cols: beta must lie in (0, 1]");
  if (c2 < 0) throw InputError("adaptive_cols: negative sample count");
  if (V.rows() != A.rows()) throw InputError("adaptive_cols: row mismatch");
  const Vector r = residual_column_norms(A, V);
  AdaptiveSample out;
  const double total = r.sum();
  if (!(total > 1e-24 * A.squaredNorm())) {
    out.empty = true;
    return out;
  }
  out.index = sample_from_weights(std::vector<double>(r.data(), r.data() + r.size()), c2, seed);
  return out;
}

Index subspace_sketch_size(Index c, double eps) { return ceil_div_real(8.0 * c / (eps * eps)); }

SpanFactor span_factor(const DenseMatrix& V) {
  SpanFactor f;
  f.Y = range_basis(V);
  f.Z = f.Y.transpose() * V;
  return f;
}

DenseMatrix top_k_left(const DenseMatrix& Xi, Index k) {
  return top_left_basis(Xi, std::min(k, Xi.rows())).Q;
}

DenseMatrix subspace_sign_block(std::uint64_t seed, Index xi, Index col_begin, Index cols) {
  const SketchSeed s{seed, streams::kSubspace};
  DenseMatrix W(xi, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index r = 0; r < xi; ++r)
      W(r, j) = prf_sign(s, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(col_begin + j));
  return W;
}

ApproxSubspace approx_subspace_svd(const DenseMatrix& A, const DenseMatrix& V, Index k, double eps,
                                   std::uint64_t seed, Index xi) {
  if (k < 1) throw InputError("approx_subspace_svd: k must be positive");
  if (!(eps > 0.0 && eps <= 1.0)) throw InputError("approx_subspace_svd: eps must lie in (0, 1]");
  if (V.rows() != A.rows()) throw InputError("approx_subspace_svd: row mismatch");
  ApproxSubspace out;
  out.xi = xi ? xi : subspace_sketch_size(V.cols(), eps);
  SpanFactor f = span_factor(V);
  out.Y.Q = f.Y;
  out.Y.rank_deficient = f.Y.cols() < k;
  const DenseMatrix W = subspace_sign_block(seed, out.xi, 0, A.cols());
  const DenseMatrix Xi = (f.Y.transpose() * A) * W.transpose() / std::sqrt(static_cast<double>(A.cols()));
  out.Delta = top_k_left(Xi, k);
  return out;
}

double residual_beta(double residual) {
  if (!(residual > 1e-24)) return 0.0;
  int e = 0;
  const double f = std::frexp(residual, &e);
  return f == 0.5 ? residual : std::ldexp(1.0, e);
}

ResidualEstimate residual_beta(const DenseMatrix& Ai, const DenseMatrix& C, int machine) {
  ResidualEstimate r;
  r.machine = machine;
  r.residual = residual_column_norms(Ai, C).sum();
  r.beta = residual_beta(r.residual);
  return r;
}

}  // namespace dpca
