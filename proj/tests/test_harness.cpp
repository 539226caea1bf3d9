#include "dpca/harness.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace dpca;
using namespace testing_support;

namespace {

Cluster zeros(int s, Index m, Index n) {
  return Cluster::arbitrary(std::vector<DenseMatrix>(static_cast<std::size_t>(s), DenseMatrix::Zero(m, n)));
}

}  // namespace

TEST(Ledger, BroadcastCounts) {
  Cluster c = zeros(4, 3, 3);
  Network net(c, 1);
  net.broadcast(DenseMatrix::Zero(5, 2), "x");
  EXPECT_EQ(net.ledger().total(), 40u);
  net.broadcast(0, "empty");
  EXPECT_EQ(net.ledger().total(), 40u);
  Cluster c3 = zeros(3, 2, 2);
  Network n3(c3, 1);
  n3.broadcast(DenseMatrix::Zero(7, 9), "core");
  EXPECT_EQ(n3.ledger().total(), 3u * 63u);
  EXPECT_EQ(n3.ledger().received_by(2), 63u);
}

TEST(Ledger, GatherSum) {
  Cluster c = zeros(2, 2, 2);
  Network net(c, 1);
  DenseMatrix sum = net.gather_sum({DenseMatrix::Identity(2, 2), DenseMatrix::Identity(2, 2)}, "g");
  EXPECT_TRUE(sum == 2 * DenseMatrix::Identity(2, 2));
  EXPECT_EQ(net.ledger().total(), 8u);
  EXPECT_TRUE(net.gather_sum({DenseMatrix::Zero(2, 2), DenseMatrix::Zero(2, 2)}, "g").isZero());
  EXPECT_THROW(net.gather_sum({DenseMatrix::Zero(2, 2), DenseMatrix::Zero(3, 2)}, "g"), ProtocolError);
  EXPECT_THROW(net.gather_sum({DenseMatrix::Zero(2, 2)}, "g"), ProtocolError);

  std::mt19937_64 rng(61);
  std::vector<DenseMatrix> parts;
  for (int i = 0; i < 2; ++i) parts.push_back(gaussian(4, 5, rng));
  DenseMatrix got = net.gather_sum(parts, "g");
  EXPECT_LE(max_abs(got - (parts[0] + parts[1])), 1e-12);
  EXPECT_EQ(net.ledger().phase_total("g"), 8u + 8u + 40u);
}

TEST(Ledger, MachineToMachineRejected) {
  CommLedger l;
  EXPECT_THROW(l.record({1, 0, 1, 3, "p", 0}), ProtocolError);
  l.record({1, 0, kServer, 3, "p", 0});
  l.record({1, kServer, 1, 4, "q", 0});
  EXPECT_EQ(l.total(), 7u);
  EXPECT_EQ(l.sent_by(0), 3u);
  EXPECT_EQ(l.received_by(1), 4u);
}

TEST(Seeds, DistinctReplayableAndCosted) {
  Cluster c = zeros(3, 2, 2);
  Network a(c, 99), b(c, 99);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 3; ++i) {
    const auto x = a.agree_seed();
    EXPECT_EQ(x, b.agree_seed());
    seen.insert(x);
  }
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_EQ(a.ledger().total(), 3u * 3u * 2u);
  EXPECT_EQ(a.ledger().transcript_jsonl(), b.ledger().transcript_jsonl());
  Network other(c, 100);
  EXPECT_NE(other.agree_seed(), Network(c, 99).agree_seed());
}

TEST(SparseColumns, WordCost) {
  DenseMatrix D = DenseMatrix::Zero(10, 6);
  for (Index j = 0; j < 3; ++j) {
    D(0, j) = 1;
    D(j + 1, j) = 2;
  }
  D.col(5).setConstant(1.5);
  Cluster c = Cluster::column({SparseColMatrix::from_dense(D)});
  Network net(c, 1);
  std::vector<Index> g;
  SparseColMatrix got = net.send_sparse_columns(0, {0, 1, 2}, "cols", &g);
  EXPECT_EQ(net.ledger().total(), 15u);
  EXPECT_TRUE(got.to_dense() == D.leftCols(3));
  net.send_sparse_columns(0, {}, "cols");
  EXPECT_EQ(net.ledger().total(), 15u);
  net.send_sparse_columns(0, {5}, "dense");
  EXPECT_EQ(net.ledger().phase_total("dense"), 21u);
  EXPECT_THROW(net.send_sparse_columns(0, {6}, "x"), ProtocolError);
}

TEST(Cluster, SplitsSumBack) {
  std::mt19937_64 rng(62);
  DenseMatrix A = integer_matrix(5, 7, -3, 3, rng);
  Cluster c = Cluster::split_arbitrary(A, 4, 3, true);
  EXPECT_TRUE(c.total() == A);
  Cluster g = Cluster::split_arbitrary(A, 3, 3, false);
  EXPECT_LE(max_abs(g.total() - A), 1e-12);
  Cluster col = Cluster::split_columns(SparseColMatrix::from_dense(A), 3);
  EXPECT_EQ(col.machines(), 3);
  EXPECT_EQ(col.offset(1), 3);
  EXPECT_TRUE(col.total() == A);
  EXPECT_THROW(Cluster::arbitrary({DenseMatrix::Zero(2, 2), DenseMatrix::Zero(2, 3)}), InputError);
}

TEST(Network, ParallelModeMatchesSequential) {
  std::mt19937_64 rng(63);
  std::vector<DenseMatrix> parts;
  for (int i = 0; i < 4; ++i) parts.push_back(gaussian(3, 3, rng));
  Cluster c = Cluster::arbitrary(parts);
  auto run = [&](bool par) {
    Network net(c, 5, par);
    auto local = net.for_each_machine([&](int i) { return DenseMatrix(c.part(i) * 2.0); });
    DenseMatrix s = net.gather_sum(local, "x");
    net.broadcast(s, "y");
    return std::make_pair(s, net.ledger().transcript_jsonl());
  };
  auto a = run(false), b = run(true);
  EXPECT_TRUE(a.first == b.first);
  EXPECT_EQ(a.second, b.second);
  Network net(c, 5, true);
  EXPECT_THROW(net.for_each_machine([](int i) -> int {
    if (i == 2) throw ProtocolError("x");
    return i;
  }),
               ProtocolError);
}

TEST(Transcript, JsonLinesFormat) {
  Cluster c = zeros(2, 1, 1);
  Network net(c, 1);
  net.broadcast(3, "p", 7);
  auto line = net.ledger().transcript_jsonl();
  auto first = nlohmann::json::parse(line.substr(0, line.find('\n')));
  EXPECT_EQ(first["from"], "server");
  EXPECT_EQ(first["to"], 1);
  EXPECT_EQ(first["words"], 3);
  EXPECT_EQ(first["phase"], "p");
  EXPECT_EQ(net.ledger().to_json()["total"], 6);
}
