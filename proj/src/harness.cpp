#include "dpca/harness.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

namespace dpca {

namespace {

std::uint64_t fnv(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

nlohmann::json endpoint(int id) {
  if (id == kServer) return "server";
  return id + 1;
}

}  // namespace

std::uint64_t digest_of(const DenseMatrix& A) {
  const Index shape[2] = {A.rows(), A.cols()};
  std::uint64_t h = fnv(shape, sizeof shape);
  for (Index k = 0; k < A.size(); ++k) {
    std::uint64_t w;
    std::memcpy(&w, A.data() + k, sizeof w);
    h = (h ^ w) * 1099511628211ull;
    h ^= h >> 29;
  }
  return h;
}

std::uint64_t digest_of(const ExactMatrix& A) {
  std::uint64_t h = 1469598103934665603ull;
  for (Index j = 0; j < A.cols(); ++j)
    for (Index i = 0; i < A.rows(); ++i) {
      std::uint64_t d = A(i, j).digest();
      h = fnv(&d, sizeof d, h);
    }
  return h;
}

std::uint64_t digest_of(const std::vector<double>& v) {
  return fnv(v.data(), sizeof(double) * v.size());
}

void CommLedger::record(MessageRecord msg) {
  if (msg.from != kServer && msg.to != kServer)
    throw ProtocolError("machine-to-machine message is not allowed");
  total_ += msg.words;
  phases_[msg.phase] += msg.words;
  rounds_[msg.round] += msg.words;
  if (msg.from != kServer) up_[msg.from] += msg.words;
  if (msg.to != kServer) down_[msg.to] += msg.words;
  log_.push_back(std::move(msg));
}

std::uint64_t CommLedger::phase_total(const std::string& phase) const {
  auto it = phases_.find(phase);
  return it == phases_.end() ? 0 : it->second;
}

std::uint64_t CommLedger::sent_by(int machine) const {
  auto it = up_.find(machine);
  return it == up_.end() ? 0 : it->second;
}

std::uint64_t CommLedger::received_by(int machine) const {
  auto it = down_.find(machine);
  return it == down_.end() ? 0 : it->second;
}

std::string CommLedger::transcript_jsonl() const {
  std::ostringstream os;
  for (const auto& m : log_) {
    nlohmann::json j = {{"round", m.round},
                        {"from", endpoint(m.from)},
                        {"to", endpoint(m.to)},
                        {"words", m.words},
                        {"phase", m.phase},
                        {"digest", m.digest}};
    os << j.dump() << '\n';
  }
  return os.str();
}

nlohmann::json CommLedger::to_json() const {
  nlohmann::json phases = nlohmann::json::object();
  for (const auto& [k, v] : phases_) phases[k] = v;
  nlohmann::json machines = nlohmann::json::array();
  std::map<int, bool> ids;
  for (const auto& [k, v] : up_) ids[k] = true;
  for (const auto& [k, v] : down_) ids[k] = true;
  for (const auto& [id, unused] : ids)
    machines.push_back({{"machine", id + 1}, {"up", sent_by(id)}, {"down", received_by(id)}});
  return {{"total", total_}, {"phases", phases}, {"machines", machines},
          {"rounds", static_cast<std::uint64_t>(rounds_.size())}, {"messages", log_.size()}};
}

Cluster Cluster::arbitrary(std::vector<DenseMatrix> parts) {
  if (parts.empty()) throw InputError("cluster needs at least one machine");
  Cluster c;
  c.kind_ = PartitionKind::Arbitrary;
  c.s_ = static_cast<int>(parts.size());
  c.m_ = parts[0].rows();
  c.n_ = parts[0].cols();
  for (const auto& p : parts) {
    if (p.rows() != c.m_ || p.cols() != c.n_) throw InputError("arbitrary partition: shape mismatch");
    require_finite(p, "partition");
  }
  c.parts_ = std::move(parts);
  return c;
}

Cluster Cluster::column(std::vector<SparseColMatrix> blocks) {
  if (blocks.empty()) throw InputError("cluster needs at least one machine");
  Cluster c;
  c.kind_ = PartitionKind::Column;
  c.s_ = static_cast<int>(blocks.size());
  c.m_ = blocks[0].rows();
  Index off = 0;
  for (const auto& b : blocks) {
    if (b.rows() != c.m_) throw InputError("column partition: row mismatch");
    c.offsets_.push_back(off);
    off += b.cols();
  }
  c.n_ = off;
  c.blocks_ = std::move(blocks);
  return c;
}

Cluster Cluster::split_arbitrary(const DenseMatrix& A, int s, std::uint64_t seed, bool integer_split) {
  if (s < 1) throw InputError("need at least one machine");
  std::mt19937_64 rng(seed);
  std::vector<DenseMatrix> parts;
  DenseMatrix rest = A;
  for (int i = 0; i + 1 < s; ++i) {
    DenseMatrix P(A.rows(), A.cols());
    if (integer_split) {
      std::uniform_int_distribution<int> d(-5, 5);
      for (Index k = 0; k < P.size(); ++k) P.data()[k] = d(rng);
    } else {
      std::normal_distribution<double> d(0.0, 1.0);
      for (Index k = 0; k < P.size(); ++k) P.data()[k] = std::ldexp(std::round(std::ldexp(d(rng), 30)), -30);
    }
    rest -= P;
    parts.push_back(std::move(P));
  }
  parts.push_back(std::move(rest));
  return arbitrary(std::move(parts));
}

Cluster Cluster::split_columns(const SparseColMatrix& A, int s) {
  if (s < 1 || s > A.cols()) throw InputError("bad machine count for column split");
  std::vector<SparseColMatrix> blocks;
  Index start = 0;
  for (int i = 0; i < s; ++i) {
    Index w = A.cols() / s + (i < A.cols() % s ? 1 : 0);
    std::vector<Index> idx;
    for (Index j = start; j < start + w; ++j) idx.push_back(j);
    blocks.push_back(A.columns(idx));
    start += w;
  }
  return column(std::move(blocks));
}

DenseMatrix Cluster::total() const {
  if (kind_ == PartitionKind::Arbitrary) {
    ExactMatrix sum(m_, n_);
    for (const auto& p : parts_)
      for (Index j = 0; j < n_; ++j)
        for (Index i = 0; i < m_; ++i) sum(i, j).add(p(i, j));
    return sum.round();
  }
  return total_sparse().to_dense();
}

SparseColMatrix Cluster::total_sparse() const {
  if (kind_ == PartitionKind::Arbitrary) return SparseColMatrix::from_dense(total());
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < s_; ++i) {
    const auto& S = blocks_[i].storage();
    for (Index j = 0; j < S.outerSize(); ++j)
      for (SparseColMatrix::Storage::InnerIterator it(S, j); it; ++it)
        t.emplace_back(static_cast<int>(it.row()), static_cast<int>(offsets_[i] + j), it.value());
  }
  return SparseColMatrix::from_triplets(m_, n_, t);
}

Network::Network(const Cluster& cluster, std::uint64_t master_seed, bool parallel)
    : cluster_(cluster), master_seed_(master_seed), parallel_(parallel) {}

void Network::send_up(int machine, std::uint64_t words, const std::string& phase, std::uint64_t digest) {
  if (machine < 0 || machine >= machines()) throw ProtocolError("unknown machine id");
  ledger_.record({round_, machine, kServer, words, phase, digest});
}

void Network::send_down(int machine, std::uint64_t words, const std::string& phase, std::uint64_t digest) {
  if (machine < 0 || machine >= machines()) throw ProtocolError("unknown machine id");
  ledger_.record({round_, kServer, machine, words, phase, digest});
}

void Network::broadcast(std::uint64_t words, const std::string& phase, std::uint64_t digest) {
  begin_round();
  for (int i = 0; i < machines(); ++i) send_down(i, words, phase, digest);
}

void Network::broadcast(const DenseMatrix& payload, const std::string& phase) {
  broadcast(static_cast<std::uint64_t>(payload.size()), phase, digest_of(payload));
}

DenseMatrix Network::gather_sum(const std::vector<DenseMatrix>& parts, const std::string& phase) {
  if (static_cast<int>(parts.size()) != machines()) throw ProtocolError("gather: wrong part count");
  for (const auto& p : parts)
    if (p.rows() != parts[0].rows() || p.cols() != parts[0].cols()) throw ProtocolError("gather: shape mismatch");
  begin_round();
  DenseMatrix sum = DenseMatrix::Zero(parts[0].rows(), parts[0].cols());
  for (int i = 0; i < machines(); ++i) {
    send_up(i, static_cast<std::uint64_t>(parts[i].size()), phase, digest_of(parts[i]));
    sum += parts[i];
  }
  return sum;
}

ExactMatrix Network::gather_sum(const std::vector<ExactMatrix>& parts, const std::string& phase) {
  if (static_cast<int>(parts.size()) != machines()) throw ProtocolError("gather: wrong part count");
  for (const auto& p : parts)
    if (p.rows() != parts[0].rows() || p.cols() != parts[0].cols()) throw ProtocolError("gather: shape mismatch");
  begin_round();
  ExactMatrix sum(parts[0].rows(), parts[0].cols());
  for (int i = 0; i < machines(); ++i) {
    send_up(i, static_cast<std::uint64_t>(parts[i].rows() * parts[i].cols()), phase, digest_of(parts[i]));
    sum.add(parts[i]);
  }
  return sum;
}

std::uint64_t agreed_seed_for(std::uint64_t master, std::uint64_t counter) {
  return prf({master, 0xa5eedu}, counter, 0);
}

std::uint64_t Network::agree_seed(const std::string& phase) {
  const std::uint64_t seed = agreed_seed_for(master_seed_, seed_counter_++);
  broadcast(2, phase, seed);
  return seed;
}

std::uint64_t sparse_column_words(const SparseColMatrix& A) {
  return 2 * static_cast<std::uint64_t>(A.nnz()) + static_cast<std::uint64_t>(A.cols());
}

SparseColMatrix Network::send_sparse_columns(int machine, const std::vector<Index>& local_idx,
                                             const std::string& phase, std::vector<Index>* global_idx) {
  if (cluster_.kind() != PartitionKind::Column) throw ProtocolError("column send needs a column partition");
  const auto& blk = cluster_.block(machine);
  for (Index j : local_idx)
    if (j < 0 || j >= blk.cols()) throw ProtocolError("column index out of range");
  SparseColMatrix cols = blk.columns(local_idx);
  send_up(machine, sparse_column_words(cols), phase, digest_of(cols.to_dense()));
  if (global_idx)
    for (Index j : local_idx) global_idx->push_back(cluster_.offset(machine) + j);
  return cols;
}

}  // namespace dpca
