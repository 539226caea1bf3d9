#pragma once

#include "dpca/exact.hpp"
#include "dpca/sketch.hpp"
#include "dpca/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

namespace dpca {

inline constexpr int kServer = -1;

struct MessageRecord {
  int round = 0;
  int from = kServer;
  int to = kServer;
  std::uint64_t words = 0;
  std::string phase;
  std::uint64_t digest = 0;
};

class CommLedger {
 public:
  void record(MessageRecord msg);

  std::uint64_t total() const { return total_; }
  std::uint64_t phase_total(const std::string& phase) const;
  const std::map<std::string, std::uint64_t>& phases() const { return phases_; }
  const std::map<int, std::uint64_t>& rounds() const { return rounds_; }
  std::uint64_t sent_by(int machine) const;
  std::uint64_t received_by(int machine) const;
  const std::vector<MessageRecord>& messages() const { return log_; }

  std::string transcript_jsonl() const;
  nlohmann::json to_json() const;

 private:
  std::vector<MessageRecord> log_;
  std::uint64_t total_ = 0;
  std::map<std::string, std::uint64_t> phases_;
  std::map<int, std::uint64_t> rounds_;
  std::map<int, std::uint64_t> up_, down_;
};

enum class PartitionKind { Arbitrary, Column };

class Cluster {
 public:
  static Cluster arbitrary(std::vector<DenseMatrix> parts);
  static Cluster column(std::vector<SparseColMatrix> blocks);
  // Splits a dense matrix into s random summands: integers in [-5, 5], or Gaussians
  // rounded to multiples of 2^-30. The last machine holds the remainder.
  static Cluster split_arbitrary(const DenseMatrix& A, int s, std::uint64_t seed, bool integer_split);
  // Splits the columns of A into s contiguous blocks of near-equal width.
  static Cluster split_columns(const SparseColMatrix& A, int s);

  PartitionKind kind() const { return kind_; }
  int machines() const { return s_; }
  Index rows() const { return m_; }
  Index cols() const { return n_; }

  const DenseMatrix& part(int i) const { return parts_.at(static_cast<std::size_t>(i)); }
  const SparseColMatrix& block(int i) const { return blocks_.at(static_cast<std::size_t>(i)); }
  Index offset(int i) const { return offsets_.at(static_cast<std::size_t>(i)); }

  // Correctly rounded entrywise sum of the parts.
  DenseMatrix total() const;
  SparseColMatrix total_sparse() const;

 private:
  PartitionKind kind_ = PartitionKind::Arbitrary;
  int s_ = 0;
  Index m_ = 0, n_ = 0;
  std::vector<DenseMatrix> parts_;
  std::vector<SparseColMatrix> blocks_;
  std::vector<Index> offsets_;
};

std::uint64_t digest_of(const DenseMatrix& A);
std::uint64_t digest_of(const ExactMatrix& A);
std::uint64_t digest_of(const std::vector<double>& v);

// Simulated coordinator network with word-exact accounting. Machines never
// address each other; every primitive moves data between a machine and the server.
class Network {
 public:
  Network(const Cluster& cluster, std::uint64_t master_seed, bool parallel = false);

  const Cluster& cluster() const { return cluster_; }
  int machines() const { return cluster_.machines(); }
  CommLedger& ledger() { return ledger_; }
  const CommLedger& ledger() const { return ledger_; }
  bool parallel() const { return parallel_; }

  int begin_round() { return ++round_; }
  int round() const { return round_; }

  void send_up(int machine, std::uint64_t words, const std::string& phase, std::uint64_t digest = 0);
  void send_down(int machine, std::uint64_t words, const std::string& phase, std::uint64_t digest = 0);

  // Server to every machine, one message each.
  void broadcast(std::uint64_t words, const std::string& phase, std::uint64_t digest = 0);
  void broadcast(const DenseMatrix& payload, const std::string& phase);

  DenseMatrix gather_sum(const std::vector<DenseMatrix>& parts, const std::string& phase);
  ExactMatrix gather_sum(const std::vector<ExactMatrix>& parts, const std::string& phase);

  // Server draws a fresh seed and broadcasts it (2 words per machine).
  std::uint64_t agree_seed(const std::string& phase = "seed");

  // Machine sends the listed local columns; returns them with global indices.
  SparseColMatrix send_sparse_columns(int machine, const std::vector<Index>& local_idx,
                                      const std::string& phase, std::vector<Index>* global_idx = nullptr);

  template <class F>
  auto for_each_machine(F&& f) -> std::vector<decltype(f(0))> {
    const int s = machines();
    std::vector<decltype(f(0))> out(static_cast<std::size_t>(s));
    if (!parallel_ || s == 1) {
      for (int i = 0; i < s; ++i) out[i] = f(i);
      return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i)
      pool.emplace_back([&, i] {
        try {
          out[i] = f(i);
        } catch (...) {
          errs[i] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
    return out;
  }

 private:
  const Cluster& cluster_;
  std::uint64_t master_seed_;
  std::uint64_t seed_counter_ = 0;
  bool parallel_;
  int round_ = 0;
  CommLedger ledger_;
};

// Seed drawn by the counter-th call of Network::agree_seed under the given master seed.
std::uint64_t agreed_seed_for(std::uint64_t master, std::uint64_t counter);

// Sparse wire cost of a column: 2 * nnz + 1 words.
std::uint64_t sparse_column_words(const SparseColMatrix& A);

}  // namespace dpca
