#include "dpca/batch.hpp"
#include "dpca/css_fast.hpp"
#include "dpca/dist_arbitrary.hpp"
#include "dpca/dist_css.hpp"
#include "dpca/instances.hpp"
#include "dpca/linalg.hpp"
#include "dpca/mtx.hpp"
#include "dpca/streaming.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

namespace py = pybind11;
using namespace dpca;

namespace {

StreamData stream_of(Index m, Index n, const std::vector<Index>& rows, const std::vector<Index>& cols,
                     const std::vector<double>& vals) {
  if (rows.size() != cols.size() || rows.size() != vals.size()) throw InputError("rows, cols and vals differ in length");
  StreamData s{m, n, {}};
  for (std::size_t t = 0; t < rows.size(); ++t) {
    StreamUpdate u{rows[t], cols[t], vals[t]};
    validate_update(u, m, n);
    s.updates.push_back(u);
  }
  return s;
}

py::dict phases_of(const CommLedger& l) {
  py::dict d;
  for (const auto& [name, words] : l.phases()) d[py::str(name)] = words;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dpca, m) {
  m.doc() = "Sketch based PCA: batch, distributed and turnstile streaming";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);
  py::register_exception<InternalError>(m, "InternalError", PyExc_RuntimeError);
  py::register_exception<StreamReplayError>(m, "StreamReplayError", PyExc_RuntimeError);

  m.def("tail_energy", &tail_energy, py::arg("A"), py::arg("k"));
  m.def("projection_residual", &projection_residual, py::arg("A"), py::arg("U"));
  m.def(
      "truncated_svd",
      [](const DenseMatrix& A, Index k) {
        SvdFactors f = truncated_svd(A, k);
        return py::make_tuple(f.U, f.sigma, f.V);
      },
      py::arg("A"), py::arg("k"));

  m.def(
      "batch_low_rank",
      [](const DenseMatrix& A, Index k, double eps, std::uint64_t seed, Index xi1, Index xi2) {
        return batch_low_rank(A, {k, eps, xi1, xi2, seed}).Q;
      },
      py::arg("A"), py::arg("k"), py::arg("eps") = 0.5, py::arg("seed") = 0, py::arg("xi1") = 0, py::arg("xi2") = 0);

  m.def(
      "split_arbitrary",
      [](const DenseMatrix& A, int s, std::uint64_t seed, bool integer) {
        Cluster c = Cluster::split_arbitrary(A, s, seed, integer);
        std::vector<DenseMatrix> parts;
        for (int i = 0; i < c.machines(); ++i) parts.push_back(c.part(i));
        return parts;
      },
      py::arg("A"), py::arg("machines"), py::arg("seed") = 0, py::arg("integer") = false);

  m.def(
      "dist_arbitrary",
      [](std::vector<DenseMatrix> parts, Index k, double eps, std::uint64_t seed, std::optional<double> noise,
         double rounding) {
        ArbProtocolParams p;
        p.k = k;
        p.eps = eps;
        p.seed = seed;
        p.noise = noise;
        p.rounding = rounding;
        ArbResult r = distributed_pca_arbitrary(Cluster::arbitrary(std::move(parts)), p);
        py::dict d;
        d["U"] = r.U.Q;
        d["branch"] = branch_name(r.branch);
        d["agreed_seed"] = r.agreed_seed;
        d["noise"] = r.noise;
        d["attempts"] = r.attempts;
        d["ledger_total"] = r.ledger.total();
        d["phases"] = phases_of(r.ledger);
        return d;
      },
      py::arg("parts"), py::arg("k"), py::arg("eps") = 0.5, py::arg("seed") = 0, py::arg("noise") = py::none(),
      py::arg("rounding") = 0x1p-20);

  m.def(
      "dist_css",
      [](const DenseMatrix& A, int machines, Index k, double eps, std::uint64_t seed, bool fast) {
        Cluster c = Cluster::split_columns(SparseColMatrix::from_dense(A), machines);
        py::dict d;
        if (fast) {
          FastCssParams p;
          p.k = k;
          p.eps = eps;
          p.seed = seed;
          FastCssResult r = distributed_css_pca_fast(c, p);
          d["U"] = r.U.Q;
          d["columns"] = r.columns;
          d["ledger_total"] = r.ledger.total();
          d["phases"] = phases_of(r.ledger);
        } else {
          CssProtocolParams p;
          p.k = k;
          p.eps = eps;
          p.seed = seed;
          CssResult r = distributed_css_pca(c, p);
          d["U"] = r.U.Q;
          d["columns"] = r.columns;
          d["ledger_total"] = r.ledger.total();
          d["phases"] = phases_of(r.ledger);
        }
        return d;
      },
      py::arg("A"), py::arg("machines"), py::arg("k"), py::arg("eps") = 0.5, py::arg("seed") = 0,
      py::arg("fast") = false);

  m.def(
      "one_pass_pca",
      [](Index rows_, Index cols_, const std::vector<Index>& rows, const std::vector<Index>& cols,
         const std::vector<double>& vals, Index k, double eps, std::uint64_t seed) {
        VectorSource src(stream_of(rows_, cols_, rows, cols, vals));
        OnePassParams p;
        p.k = k;
        p.eps = eps;
        p.seed = seed;
        OnePassResult r = one_pass_pca(src, p);
        py::dict d;
        d["U"] = r.U.Q;
        d["space_words"] = r.space_words;
        return d;
      },
      py::arg("m"), py::arg("n"), py::arg("rows"), py::arg("cols"), py::arg("vals"), py::arg("k"),
      py::arg("eps") = 0.5, py::arg("seed") = 0);

  m.def(
      "one_pass_factorization",
      [](Index rows_, Index cols_, const std::vector<Index>& rows, const std::vector<Index>& cols,
         const std::vector<double>& vals, Index k, double eps, std::uint64_t seed) {
        VectorSource src(stream_of(rows_, cols_, rows, cols, vals));
        OnePassParams p;
        p.k = k;
        p.eps = eps;
        p.seed = seed;
        FactorizationResult r = one_pass_factorization(src, p);
        py::dict d;
        d["T"] = r.T;
        d["sigma"] = r.sigma;
        d["K"] = r.K;
        d["space_words"] = r.space_words;
        return d;
      },
      py::arg("m"), py::arg("n"), py::arg("rows"), py::arg("cols"), py::arg("vals"), py::arg("k"),
      py::arg("eps") = 0.5, py::arg("seed") = 0);

  m.def(
      "two_pass_pca",
      [](const std::string& path, Index k, double eps, std::uint64_t seed, std::optional<double> noise) {
        FileSource src(path);
        ArbProtocolParams p;
        p.k = k;
        p.eps = eps;
        p.seed = seed;
        p.noise = noise;
        TwoPassResult r = two_pass_pca(src, p);
        py::dict d;
        d["U"] = r.U.Q;
        d["branch"] = branch_name(r.branch);
        d["pass1_words"] = r.pass1_words;
        d["pass2_words"] = r.pass2_words;
        return d;
      },
      py::arg("path"), py::arg("k"), py::arg("eps") = 0.5, py::arg("seed") = 0, py::arg("noise") = py::none());

  m.def(
      "read_stream",
      [](const std::string& path) {
        StreamData s = read_stream_file(path);
        std::vector<Index> r, c;
        std::vector<double> v;
        for (const auto& u : s.updates) {
          r.push_back(u.i);
          c.push_back(u.j);
          v.push_back(u.x);
        }
        return py::make_tuple(s.m, s.n, r, c, v);
      },
      py::arg("path"));
  m.def(
      "write_stream",
      [](const std::string& path, Index m_, Index n_, const std::vector<Index>& rows, const std::vector<Index>& cols,
         const std::vector<double>& vals) {
        std::ofstream f(path);
        if (!f) throw InputError("cannot open " + path);
        write_stream(f, stream_of(m_, n_, rows, cols, vals));
      },
      py::arg("path"), py::arg("m"), py::arg("n"), py::arg("rows"), py::arg("cols"), py::arg("vals"));
  m.def("read_mtx", &read_mtx_dense_file, py::arg("path"));
  m.def(
      "write_mtx",
      [](const std::string& path, const DenseMatrix& A) {
        std::ofstream f(path);
        if (!f) throw InputError("cannot open " + path);
        write_mtx(f, A);
      },
      py::arg("path"), py::arg("A"));

  m.def("gen_lowrank_noise", &gen_lowrank_noise, py::arg("m"), py::arg("n"), py::arg("k"), py::arg("noise"),
        py::arg("seed") = 0);
  m.def(
      "gen_css_hard",
      [](Index k, Index phi, double eps) {
        HardCssSpec spec;
        spec.k = k;
        spec.phi = phi;
        spec.eps = eps;
        return gen_css_hard(spec).to_dense();
      },
      py::arg("k"), py::arg("phi"), py::arg("eps") = 0.5);
}
