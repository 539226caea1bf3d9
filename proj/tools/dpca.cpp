#include "dpca/batch.hpp"
#include "dpca/css_fast.hpp"
#include "dpca/dist_arbitrary.hpp"
#include "dpca/dist_css.hpp"
#include "dpca/instances.hpp"
#include "dpca/linalg.hpp"
#include "dpca/mtx.hpp"
#include "dpca/streaming.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

using namespace dpca;
using json = nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitProtocol = 3;
constexpr int kExitUsage = 64;
constexpr double kMaterializeLimit = 1e7;

struct Options {
  std::string input;
  Index k = 1;
  double eps = 0.5;
  std::optional<double> delta;
  int machines = 2;
  std::string partition;
  std::string split = "gaussian";
  std::uint64_t seed = 0;
  int trials = 1;
  std::string json_out;
  bool check = false;
  bool timings = false;
  bool parallel = false;
  bool machine_computes_u = false;

  Index xi1 = 0, xi2 = 0, xi3 = 0, xi4 = 0, affine = 0;
  Index ell = 0, c1 = 0, c2 = 0, xi = 0;
  std::optional<double> noise;
  std::optional<double> rounding;
};

struct GenOptions {
  std::string kind;
  Index m = 0, n = 0, k = 1, phi = 0;
  int machines = 2;
  double eps = 0.5;
  double noise = 0.0;
  double rotation_unit = 0.0;
  bool rotate = false;
  std::uint64_t seed = 0;
  std::string format = "mtx";
  std::string out;
};

struct Input {
  std::string format;  // "mtx", "stream" or "stdin"
  Index m = 0, n = 0;
  SparseColMatrix sparse;
  std::optional<StreamData> stream;

  bool materializable() const { return static_cast<double>(m) * static_cast<double>(n) <= kMaterializeLimit; }
};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Input load_input(const std::string& path) {
  if (path.empty()) throw InputError("--input is required");
  Input in;
  if (ends_with(path, ".mtx")) {
    in.format = "mtx";
    in.sparse = read_mtx_sparse_file(path);
  } else {
    in.format = path == "-" ? "stdin" : "stream";
    in.stream = path == "-" ? read_stream(std::cin) : read_stream_file(path);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(in.stream->updates.size());
    for (const auto& u : in.stream->updates) t.emplace_back(static_cast<int>(u.i), static_cast<int>(u.j), u.x);
    in.sparse = SparseColMatrix::from_triplets(in.stream->m, in.stream->n, t);
  }
  in.m = in.sparse.rows();
  in.n = in.sparse.cols();
  return in;
}

DenseMatrix dense_of(const Input& in) {
  if (!in.materializable()) throw InputError("matrix too large to materialize");
  if (in.stream) return materialize(*in.stream);
  return in.sparse.to_dense();
}

// Error of the rank-k approximation P*Q against the best rank-k error.
json evaluate(const Input& in, const DenseMatrix& P, const DenseMatrix& Q, Index k, std::uint64_t seed) {
  json r;
  double residual = 0.0, tail = 0.0;
  if (in.materializable()) {
    const DenseMatrix A = dense_of(in);
    residual = (A - P * Q).squaredNorm();
    tail = tail_energy(A, k);
    r["ratio_kind"] = "exact";
  } else {
    const JltSpec J = JltSpec::make(in.n, 1.0, in.m, {seed, streams::kJlt});
    const DenseMatrix JA = jlt_apply(J, in.sparse);
    residual = (JA - jlt_apply(J, P) * Q).squaredNorm();
    tail = tail_energy(JA, k);
    r["ratio_kind"] = "estimated";
  }
  r["residual"] = residual;
  r["tail"] = tail;
  if (tail > 0.0)
    r["ratio"] = residual / tail;
  else
    r["ratio"] = residual == 0.0 ? json(1.0) : json(nullptr);
  return r;
}

json evaluate_basis(const Input& in, const DenseMatrix& U, Index k, std::uint64_t seed) {
  const DenseMatrix UtA = U.transpose() * in.sparse.storage();
  return evaluate(in, U, UtA, k, seed);
}

json ledger_json(const CommLedger& l) {
  json j = l.to_json();
  std::uint64_t sum = 0;
  for (const auto& [name, words] : l.phases()) sum += words;
  j["phase_sum"] = sum;
  return j;
}

void add_check(json& run, const std::string& name, bool pass) {
  run["checks"].push_back({{"name", name}, {"pass", pass}});
}

void basis_checks(json& run, const DenseMatrix& U, Index m, Index k) {
  const DenseMatrix G = U.transpose() * U - DenseMatrix::Identity(U.cols(), U.cols());
  add_check(run, "u_shape", U.rows() == m && U.cols() == k);
  add_check(run, "u_orthonormal", U.cols() == 0 || G.cwiseAbs().maxCoeff() <= 1e-8);
  if (run.contains("ratio") && run["ratio"].is_number() && run["ratio_kind"] == "exact")
    add_check(run, "ratio_at_least_one", run["ratio"].get<double>() >= 1.0 - 1e-9);
}

void ledger_checks(json& run, const CommLedger& l) {
  std::uint64_t sum = 0;
  for (const auto& [name, words] : l.phases()) sum += words;
  add_check(run, "ledger_phases_sum", sum == l.total());
}

using Runner = std::function<json(const Input&, const Options&, std::uint64_t)>;

json run_batch(const Input& in, const Options& o, std::uint64_t seed) {
  BatchParams p;
  p.k = o.k;
  p.eps = o.eps;
  p.xi1 = o.xi1;
  p.xi2 = o.xi2;
  p.seed = seed;
  const DenseMatrix A = dense_of(in);
  const OrthoBasis U = batch_low_rank(A, p);
  json run = evaluate_basis(in, U.Q, o.k, seed);
  run["xi1"] = p.left_size();
  run["xi2"] = p.right_size();
  run["rank_deficient"] = U.rank_deficient;
  if (o.check) {
    basis_checks(run, U.Q, in.m, o.k);
    add_check(run, "deterministic", batch_low_rank(A, p).Q == U.Q);
  }
  return run;
}

Cluster arbitrary_cluster(const Input& in, const Options& o, std::uint64_t seed) {
  const DenseMatrix A = dense_of(in);
  if (o.partition.empty() || o.partition == "arbitrary") {
    if (o.split != "gaussian" && o.split != "integer") throw InputError("--split must be gaussian or integer");
    return Cluster::split_arbitrary(A, o.machines, seed, o.split == "integer");
  }
  const Cluster blocks = Cluster::split_columns(in.sparse, o.machines);
  std::vector<DenseMatrix> parts;
  for (int i = 0; i < blocks.machines(); ++i) {
    DenseMatrix P = DenseMatrix::Zero(in.m, in.n);
    P.middleCols(blocks.offset(i), blocks.block(i).cols()) = blocks.block(i).to_dense();
    parts.push_back(std::move(P));
  }
  return Cluster::arbitrary(std::move(parts));
}

ArbProtocolParams arb_params(const Options& o, std::uint64_t seed) {
  ArbProtocolParams p;
  p.k = o.k;
  p.eps = o.eps;
  p.xi1 = o.xi1;
  p.xi2 = o.xi2;
  p.affine_xi = o.affine;
  p.noise = o.noise;
  if (o.rounding) p.rounding = *o.rounding;
  if (o.delta) p.delta = *o.delta;
  p.seed = seed;
  p.parallel = o.parallel;
  return p;
}

json run_dist_arb(const Input& in, const Options& o, std::uint64_t seed) {
  if (!o.partition.empty() && o.partition != "arbitrary" && o.partition != "column")
    throw InputError("--partition must be arbitrary or column");
  const Cluster cluster = arbitrary_cluster(in, o, seed);
  const ArbProtocolParams p = arb_params(o, seed);
  const ArbResult r = distributed_pca_arbitrary(cluster, p);
  json run = evaluate_basis(in, r.U.Q, o.k, seed);
  run["ledger"] = ledger_json(r.ledger);
  run["branch"] = branch_name(r.branch);
  run["sketch_rank"] = r.sketch_rank;
  run["noise"] = r.noise;
  run["attempts"] = r.attempts;
  run["agreed_seed"] = r.agreed_seed;
  run["machines_agree"] = r.machines_agree;
  run["xi1"] = r.xi1;
  run["xi2"] = r.xi2;
  run["affine_left"] = r.affine_left;
  run["affine_right"] = r.affine_right;
  if (o.check) {
    basis_checks(run, r.U.Q, in.m, o.k);
    ledger_checks(run, r.ledger);
    add_check(run, "machines_agree", r.machines_agree);
    add_check(run, "ledger_formula",
              r.ledger.total() == arbitrary_ledger_formula(cluster.machines(), in.m, o.k, r.xi1, r.xi2,
                                                           r.affine_left, r.affine_right, r.branch, r.attempts));
  }
  return run;
}

Cluster column_cluster(const Input& in, const Options& o) {
  if (!o.partition.empty() && o.partition != "column")
    throw InputError("column subset protocols need --partition column");
  return Cluster::split_columns(in.sparse, o.machines);
}

json columns_json(const std::vector<Index>& c) {
  json j = json::array();
  for (Index v : c) j.push_back(v);
  return j;
}

json run_dist_css(const Input& in, const Options& o, std::uint64_t seed) {
  const Cluster cluster = column_cluster(in, o);
  CssProtocolParams p;
  p.k = o.k;
  p.eps = o.eps;
  p.ell = o.ell;
  p.c1 = o.c1;
  p.c2 = o.c2;
  p.xi = o.xi;
  p.seed = seed;
  p.parallel = o.parallel;
  p.server_computes_u = !o.machine_computes_u;
  const CssResult r = distributed_css_pca(cluster, p);
  json run = evaluate_basis(in, r.U.Q, o.k, seed);
  run["ledger"] = ledger_json(r.ledger);
  run["columns"] = columns_json(r.columns);
  run["column_count"] = r.columns.size();
  run["adaptive_skipped"] = r.adaptive.skipped;
  run["agreed_seed"] = r.agreed_seed;
  run["machines_agree"] = r.machines_agree;
  run["xi"] = r.xi;
  if (o.check) {
    const Index phi = in.sparse.max_col_nnz();
    basis_checks(run, r.U.Q, in.m, o.k);
    ledger_checks(run, r.ledger);
    add_check(run, "machines_agree", r.machines_agree);
    add_check(run, "column_count", r.columns.size() == r.global_pick.size() + r.adaptive.global.size());
    add_check(run, "adaptive_phase_bound",
              r.ledger.phase_total("adaptive") <= static_cast<std::uint64_t>(p.adaptive_count() * (2 * phi + 1)));
    add_check(run, "ledger_bound",
              r.ledger.total() <= css_ledger_bound(cluster.machines(), in.m, o.k, p.local_count(), p.global_count(),
                                                   p.adaptive_count(), r.xi, phi, p.server_computes_u));
  }
  return run;
}

json run_dist_css_fast(const Input& in, const Options& o, std::uint64_t seed) {
  const Cluster cluster = column_cluster(in, o);
  FastCssParams p;
  p.k = o.k;
  p.eps = o.eps;
  if (o.delta) p.delta = *o.delta;
  p.ell = o.ell;
  p.c1 = o.c1;
  p.c2 = o.c2;
  p.xi = o.xi;
  p.seed = seed;
  p.parallel = o.parallel;
  const FastCssResult r = distributed_css_pca_fast(cluster, p);
  json run = evaluate_basis(in, r.U.Q, o.k, seed);
  run["ledger"] = ledger_json(r.ledger);
  run["columns"] = columns_json(r.columns);
  run["column_count"] = r.columns.size();
  run["adaptive_skipped"] = r.adaptive.skipped;
  run["agreed_seed"] = r.agreed_seed;
  run["jlt_seed"] = r.jlt_seed;
  run["xi"] = r.xi;
  run["identity_embedding"] = r.identity_embedding;
  if (o.check) {
    const Index phi = in.sparse.max_col_nnz();
    basis_checks(run, r.U.Q, in.m, o.k);
    ledger_checks(run, r.ledger);
    add_check(run, "column_count", r.columns.size() == r.global_pick.size() + r.adaptive.global.size());
    add_check(run, "adaptive_phase_bound",
              r.ledger.phase_total("adaptive") <= static_cast<std::uint64_t>(p.adaptive_count() * (2 * phi + 1)));
  }
  return run;
}

std::unique_ptr<UpdateSource> stream_source(const Input& in, const Options& o) {
  if (in.format == "stream") return std::make_unique<FileSource>(o.input);
  if (in.stream) return std::make_unique<VectorSource>(*in.stream);
  return std::make_unique<VectorSource>(stream_from_matrix(in.sparse.to_dense()));
}

OnePassParams one_pass_params(const Options& o, std::uint64_t seed) {
  OnePassParams p;
  p.k = o.k;
  p.eps = o.eps;
  p.xi1 = o.xi1;
  p.xi2 = o.xi2;
  p.xi3 = o.xi3;
  p.xi4 = o.xi4;
  p.seed = seed;
  return p;
}

json run_stream_1p(const Input& in, const Options& o, std::uint64_t seed) {
  auto src = stream_source(in, o);
  const OnePassResult r = one_pass_pca(*src, one_pass_params(o, seed));
  json run = evaluate_basis(in, r.U.Q, o.k, seed);
  run["space_words"] = r.space_words;
  run["xi"] = {r.xi1, r.xi2, r.xi3, r.xi4};
  if (o.check) {
    basis_checks(run, r.U.Q, in.m, o.k);
    add_check(run, "space_formula",
              r.space_words == one_pass_space_words(in.m, in.n, r.xi1, r.xi2, r.xi3, r.xi4, false));
  }
  return run;
}

json run_stream_1p_fact(const Input& in, const Options& o, std::uint64_t seed) {
  auto src = stream_source(in, o);
  const OnePassParams p = one_pass_params(o, seed);
  const FactorizationResult r = one_pass_factorization(*src, p);
  json run = evaluate(in, r.T * r.sigma.asDiagonal(), r.K, o.k, seed);
  run["space_words"] = r.space_words;
  run["sigma"] = std::vector<double>(r.sigma.data(), r.sigma.data() + r.sigma.size());
  if (o.check) {
    bool sorted = true;
    for (Index t = 1; t < r.sigma.size(); ++t) sorted = sorted && r.sigma(t) <= r.sigma(t - 1);
    add_check(run, "sigma_non_increasing", sorted && (r.sigma.size() == 0 || r.sigma.minCoeff() >= 0.0));
    add_check(run, "factor_shapes", r.T.rows() == in.m && r.T.cols() == o.k && r.K.rows() == o.k && r.K.cols() == in.n);
    TurnstileSketchState probe(in.m, in.n, p, true);
    add_check(run, "space_formula", r.space_words == probe.words());
  }
  return run;
}

json run_stream_2p(const Input& in, const Options& o, std::uint64_t seed) {
  auto src = stream_source(in, o);
  const ArbProtocolParams p = arb_params(o, seed);
  const TwoPassResult r = two_pass_pca(*src, p);
  json run = evaluate_basis(in, r.U.Q, o.k, seed);
  run["branch"] = branch_name(r.branch);
  run["sketch_rank"] = r.sketch_rank;
  run["noise"] = r.noise;
  run["agreed_seed"] = r.seed;
  run["space_words"] = std::max(r.pass1_words, r.pass2_words);
  run["pass1_words"] = r.pass1_words;
  run["pass2_words"] = r.pass2_words;
  run["updates"] = r.updates;
  if (o.check) {
    basis_checks(run, r.U.Q, in.m, o.k);
    const auto k = static_cast<std::uint64_t>(o.k), m = static_cast<std::uint64_t>(in.m);
    const auto x1 = static_cast<std::uint64_t>(p.left_size()), x2 = static_cast<std::uint64_t>(p.right_size());
    add_check(run, "pass1_formula", r.pass1_words == 4 * k * k + 2 * m * k + x1 * x2);
    if (r.branch == ArbBranch::Smoothed) add_check(run, "pass2_formula", r.pass2_words == x2 * k + m * k);
  }
  return run;
}

std::uint64_t trial_seed(std::uint64_t seed, int trials, int t) {
  return trials == 1 ? seed : prf({seed, streams::kTrial}, static_cast<std::uint64_t>(t), 0);
}

std::vector<json> run_trials(const Runner& f, const Input& in, const Options& o) {
  const int trials = o.trials;
  std::vector<json> runs(static_cast<std::size_t>(trials));
  std::vector<std::exception_ptr> errs(runs.size());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < trials; t = next++) {
      try {
        const std::uint64_t s = trial_seed(o.seed, trials, t);
        runs[t] = f(in, o, s);
        runs[t]["seed"] = s;
      } catch (...) {
        errs[t] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, trials);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  std::sort(runs.begin(), runs.end(),
            [](const json& a, const json& b) { return a["seed"].get<std::uint64_t>() < b["seed"].get<std::uint64_t>(); });
  return runs;
}

json parameters_json(const std::string& algorithm, const Options& o) {
  json p = {{"k", o.k}, {"eps", o.eps}, {"seed", o.seed}, {"trials", o.trials}};
  if (o.delta) p["delta"] = *o.delta;
  if (algorithm.rfind("dist", 0) == 0) {
    p["machines"] = o.machines;
    p["partition"] = o.partition.empty() ? (algorithm == "dist-arb" ? "arbitrary" : "column") : o.partition;
  }
  if (algorithm == "dist-arb") p["split"] = o.split;
  json c = json::object();
  const std::pair<const char*, Index> sizes[] = {{"xi1", o.xi1}, {"xi2", o.xi2}, {"xi3", o.xi3}, {"xi4", o.xi4},
                                                 {"affine", o.affine}, {"ell", o.ell}, {"c1", o.c1},
                                                 {"c2", o.c2}, {"xi", o.xi}};
  for (const auto& [name, v] : sizes)
    if (v) c[name] = v;
  if (o.noise) c["noise"] = *o.noise;
  if (o.rounding) c["rounding"] = *o.rounding;
  p["const"] = c;
  return p;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

json run_algorithm(const std::string& algorithm, const Runner& f, const Options& o) {
  if (o.trials < 1) throw InputError("--trials must be positive");
  const auto start = std::chrono::steady_clock::now();
  const Input in = load_input(o.input);
  const std::vector<json> runs = run_trials(f, in, o);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json report = {{"algorithm", algorithm},
                 {"input", {{"path", o.input}, {"format", in.format}, {"m", in.m}, {"n", in.n},
                            {"nnz", in.sparse.nnz()}, {"max_col_nnz", in.sparse.max_col_nnz()}}},
                 {"parameters", parameters_json(algorithm, o)}};
  std::vector<double> ratios;
  for (const auto& r : runs)
    if (r["ratio"].is_number()) ratios.push_back(r["ratio"].get<double>());
  report["ratio"] = ratios.size() == runs.size() ? json(median_of(ratios)) : json(nullptr);
  report["ratio_kind"] = runs.front()["ratio_kind"];
  if (runs.size() == 1) {
    for (const auto& [key, value] : runs.front().items())
      if (key != "ratio") report[key] = value;
  } else {
    report["runs"] = runs;
    json summary = {{"trials", runs.size()}};
    if (!ratios.empty()) {
      summary["median_ratio"] = median_of(ratios);
      summary["min_ratio"] = *std::min_element(ratios.begin(), ratios.end());
      summary["max_ratio"] = *std::max_element(ratios.begin(), ratios.end());
    }
    report["summary"] = summary;
  }
  if (o.check) {
    bool all = true;
    for (const auto& r : runs)
      for (const auto& c : r["checks"]) all = all && c["pass"].get<bool>();
    report["checks_passed"] = all;
  }
  if (o.timings) report["wall_time_s"] = wall;
  return report;
}

json run_check(const Options& o) {
  const Input in = load_input(o.input);
  json report = {{"algorithm", "check"},
                 {"input", {{"path", o.input}, {"format", in.format}, {"m", in.m}, {"n", in.n},
                            {"nnz", in.sparse.nnz()}, {"max_col_nnz", in.sparse.max_col_nnz()}}}};
  json run;
  run["checks"] = json::array();
  if (in.materializable()) {
    const DenseMatrix A = dense_of(in);
    add_check(run, "finite", A.allFinite());
    const SvdFactors f = svd(A);
    const Index r = f.sigma.size();
    const auto ortho = [](const DenseMatrix& X) {
      return X.cols() == 0 ||
             (X.transpose() * X - DenseMatrix::Identity(X.cols(), X.cols())).cwiseAbs().maxCoeff() <= 1e-8;
    };
    add_check(run, "svd_u_orthonormal", ortho(f.U));
    add_check(run, "svd_v_orthonormal", ortho(f.V));
    bool sorted = true;
    for (Index t = 1; t < r; ++t) sorted = sorted && f.sigma(t) <= f.sigma(t - 1);
    add_check(run, "svd_sigma_sorted", sorted && (r == 0 || f.sigma.minCoeff() >= 0.0));
    add_check(run, "svd_reconstruction",
              (f.U * f.sigma.asDiagonal() * f.V.transpose() - A).norm() <= 1e-8 * (1.0 + A.norm()));
    report["frobenius_sq"] = A.squaredNorm();
    report["numeric_rank"] = numeric_rank(A);
    if (o.k >= 0 && o.k <= std::min(in.m, in.n)) report["tail"] = tail_energy(A, o.k);
  }
  bool all = true;
  for (const auto& c : run["checks"]) all = all && c["pass"].get<bool>();
  report["checks"] = run["checks"];
  report["checks_passed"] = all;
  return report;
}

void run_gen(const GenOptions& g) {
  DenseMatrix dense;
  SparseColMatrix sparse;
  bool is_sparse = false;
  if (g.kind == "lowrank") {
    if (g.m <= 0 || g.n <= 0) throw InputError("gen lowrank needs -m and -n");
    if (g.phi > 0) {
      sparse = gen_sparse_lowrank(g.m, g.n, g.k, g.phi, g.noise, g.seed);
      is_sparse = true;
    } else {
      dense = gen_lowrank_noise(g.m, g.n, g.k, g.noise, g.seed);
    }
  } else if (g.kind == "css-hard") {
    HardCssSpec spec;
    spec.k = g.k;
    spec.phi = g.phi ? g.phi : 2;
    spec.eps = g.eps;
    spec.rotate = g.rotate;
    spec.rotation_unit = g.rotation_unit;
    spec.seed = g.seed;
    sparse = gen_css_hard(spec);
    is_sparse = true;
  } else if (g.kind == "dense-hard") {
    HardDenseSpec spec;
    spec.m = g.m;
    spec.k = g.k;
    spec.s = g.machines;
    spec.n = g.n ? g.n : static_cast<Index>(g.machines) * g.m;
    sparse = gen_dense_hard(spec, g.seed).cluster.total_sparse();
    is_sparse = true;
  } else {
    throw InputError("unknown generator: " + g.kind);
  }

  std::ofstream file;
  if (!g.out.empty()) {
    file.open(g.out);
    if (!file) throw InputError("cannot open " + g.out);
  }
  std::ostream& out = g.out.empty() ? std::cout : file;
  if (g.format == "mtx") {
    if (is_sparse)
      write_mtx(out, sparse);
    else
      write_mtx(out, dense);
  } else if (g.format == "stream") {
    write_stream(out, stream_from_matrix(is_sparse ? sparse.to_dense() : dense));
  } else {
    throw InputError("--format must be mtx or stream");
  }
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--input", o.input, "MatrixMarket (.mtx) or stream file, - for a stream on stdin")->required();
  sub->add_option("-k,--k", o.k, "target rank");
  sub->add_option("--eps", o.eps, "accuracy parameter");
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--trials", o.trials, "independent trials with derived seeds");
  sub->add_option("--json-out", o.json_out, "also write the report here");
  sub->add_flag("--check", o.check, "report runtime invariants");
  sub->add_flag("--timings", o.timings, "include wall time in the report");
}

void add_machines(CLI::App* sub, Options& o) {
  sub->add_option("--machines", o.machines, "number of machines");
  sub->add_option("--partition", o.partition, "arbitrary or column");
  sub->add_flag("--parallel", o.parallel, "one thread per machine");
}

void add_arb_constants(CLI::App* sub, Options& o) {
  sub->add_option("--delta", o.delta, "failure probability of the span certificate");
  sub->add_option("--const-xi1", o.xi1, "rows of the left sketch");
  sub->add_option("--const-xi2", o.xi2, "columns of the right sketch");
  sub->add_option("--const-affine", o.affine, "affine embedding size");
  sub->add_option("--const-noise", o.noise, "noise magnitude");
  sub->add_option("--const-rounding", o.rounding, "rounding unit of V, 0 disables");
}

void add_css_constants(CLI::App* sub, Options& o) {
  sub->add_option("--const-ell", o.ell, "local columns per machine");
  sub->add_option("--const-c1", o.c1, "global columns");
  sub->add_option("--const-c2", o.c2, "adaptive columns");
  sub->add_option("--const-xi", o.xi, "subspace sketch size");
}

void emit(const json& report, const Options& o) {
  const std::string text = report.dump(2);
  std::cout << text << '\n';
  if (!o.json_out.empty()) {
    std::ofstream f(o.json_out);
    if (!f) throw InputError("cannot open " + o.json_out);
    f << text << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketch based PCA and column subset selection: batch, distributed and streaming runs"};
  app.require_subcommand(1);
  Options o;
  GenOptions g;

  std::vector<std::pair<CLI::App*, std::pair<std::string, Runner>>> algorithms;
  auto algorithm = [&](const std::string& name, const std::string& help, Runner f) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, o);
    algorithms.push_back({sub, {name, std::move(f)}});
    return sub;
  };

  CLI::App* batch = algorithm("batch", "two-sided sketch PCA of one matrix", run_batch);
  batch->add_option("--const-xi1", o.xi1, "rows of the left sketch");
  batch->add_option("--const-xi2", o.xi2, "columns of the right sketch");

  CLI::App* arb = algorithm("dist-arb", "distributed PCA, arbitrary partition", run_dist_arb);
  add_machines(arb, o);
  add_arb_constants(arb, o);
  arb->add_option("--split", o.split, "summands of the arbitrary partition: gaussian or integer");

  CLI::App* css = algorithm("dist-css", "distributed column subset PCA", run_dist_css);
  add_machines(css, o);
  add_css_constants(css, o);
  css->add_flag("--machine-computes-u", o.machine_computes_u, "broadcast Xi instead of U");

  CLI::App* fast = algorithm("dist-css-fast", "distributed column subset PCA, sparse kernels", run_dist_css_fast);
  add_machines(fast, o);
  add_css_constants(fast, o);
  fast->add_option("--delta", o.delta, "failure probability");

  CLI::App* s1 = algorithm("stream-1p", "one-pass turnstile PCA", run_stream_1p);
  CLI::App* s1f = algorithm("stream-1p-fact", "one-pass turnstile factorization", run_stream_1p_fact);
  for (CLI::App* sub : {s1, s1f})
    for (const auto& [flag, ptr] : {std::pair{"--const-xi1", &o.xi1}, std::pair{"--const-xi2", &o.xi2},
                                    std::pair{"--const-xi3", &o.xi3}, std::pair{"--const-xi4", &o.xi4}})
      sub->add_option(flag, *ptr, "sketch size");

  CLI::App* s2 = algorithm("stream-2p", "two-pass turnstile PCA", run_stream_2p);
  add_arb_constants(s2, o);

  CLI::App* check = app.add_subcommand("check", "validate an input file and its factorizations");
  check->add_option("--input", o.input, "MatrixMarket (.mtx) or stream file")->required();
  check->add_option("-k,--k", o.k, "rank for the tail energy");
  check->add_option("--json-out", o.json_out, "also write the report here");

  CLI::App* gen = app.add_subcommand("gen", "generate an instance");
  gen->add_option("kind", g.kind, "dense-hard, css-hard or lowrank")
      ->required()
      ->check(CLI::IsMember({"dense-hard", "css-hard", "lowrank"}));
  gen->add_option("-m", g.m, "rows");
  gen->add_option("-n", g.n, "columns");
  gen->add_option("-k,--k", g.k, "rank or number of blocks");
  gen->add_option("--phi", g.phi, "column sparsity or block width");
  gen->add_option("--eps", g.eps, "accuracy parameter of the hard instance");
  gen->add_option("--machines", g.machines, "machines of the dense hard instance");
  gen->add_option("--noise", g.noise, "noise scale");
  gen->add_flag("--rotate", g.rotate, "rotate the column subset instance");
  gen->add_option("--rotation-unit", g.rotation_unit, "rounding unit of the rotation");
  gen->add_option("--seed", g.seed, "seed");
  gen->add_option("--format", g.format, "mtx or stream");
  gen->add_option("--out", g.out, "output path, default stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      run_gen(g);
      return 0;
    }
    if (check->parsed()) {
      const json report = run_check(o);
      emit(report, o);
      return report["checks_passed"].get<bool>() ? 0 : kExitProtocol;
    }
    for (const auto& [sub, entry] : algorithms) {
      if (!sub->parsed()) continue;
      const json report = run_algorithm(entry.first, entry.second, o);
      emit(report, o);
      if (o.check && !report["checks_passed"].get<bool>()) return kExitProtocol;
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << '\n';
    return kExitProtocol;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitProtocol;
  } catch (const StreamReplayError& e) {
    std::cerr << "stream error: " << e.what() << '\n';
    return kExitProtocol;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}
