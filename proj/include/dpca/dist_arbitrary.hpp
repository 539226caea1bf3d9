#pragma once

#include "dpca/batch.hpp"
#include "dpca/harness.hpp"
#include "dpca/linalg.hpp"

#include <optional>

namespace dpca {

struct ArbProtocolParams {
  Index k = 1;
  double eps = 0.5;
  Index xi1 = 0;        // 0 selects ceil(4k/eps^2)
  Index xi2 = 0;
  Index affine_xi = 0;  // 0 selects ceil(8k/eps^2)
  // Noise magnitude; unset selects 1e-6 * ||A||_F / sqrt(mn) rounded down to a power of two.
  std::optional<double> noise;
  double rounding = 0x1p-20;  // 0 disables rounding of V
  double delta = 0.01;
  std::uint64_t seed = 0;
  bool parallel = false;

  Index left_size() const { return xi1 ? xi1 : jl_size(k, eps); }
  Index right_size() const { return xi2 ? xi2 : jl_size(k, eps); }
  Index affine_size_k() const { return affine_xi ? affine_xi : affine_size(k, eps); }
  void validate() const;
};

enum class ArbBranch { LowRank, Smoothed };
const char* branch_name(ArbBranch b);

inline constexpr std::int64_t kRankTestBound = 1 << 16;

// Every transform of one protocol attempt, derived from the agreed seed.
struct ArbTransforms {
  std::uint64_t seed = 0;
  DenseMatrix H1;  // 2k x m, integers in [-kRankTestBound, kRankTestBound]
  DenseMatrix H2;  // n x 2k
  TwoSidedSketch jl;
  Srht left;       // affine, over m
  Srht right;      // affine, over n

  ArbTransforms(Index m, Index n, const ArbProtocolParams& p, std::uint64_t seed);
};

// Noise term of machine 1: eta times a +-1 matrix from the agreed seed.
double noise_sign(std::uint64_t seed, Index i, Index j);
double default_noise(const DenseMatrix& A);

struct RankTestOutcome {
  bool rank_at_least_2k = false;
  Index sketch_rank = 0;
  DenseMatrix Z;
};

RankTestOutcome rank_test(Network& net, const ArbTransforms& tr, Index k);

struct BranchOutput {
  OrthoBasis U;
  bool machines_agree = true;
};

// Throws RetryWithNewSeed when the span certificate fails.
BranchOutput low_rank_protocol(Network& net, const ArbTransforms& tr, const RankTestOutcome& rt, Index k);
BranchOutput smoothed_protocol(Network& net, const ArbTransforms& tr, Index k, double eta, double rho);

struct ArbResult {
  OrthoBasis U;
  ArbBranch branch = ArbBranch::Smoothed;
  std::uint64_t agreed_seed = 0;
  Index sketch_rank = 0;
  double noise = 0.0;
  int attempts = 0;
  bool machines_agree = true;
  Index xi1 = 0, xi2 = 0, affine_left = 0, affine_right = 0;
  CommLedger ledger;
};

ArbResult distributed_pca_arbitrary(const Cluster& cluster, const ArbProtocolParams& p);

// Closed-form ledger total of a run with the given branch and number of attempts.
std::uint64_t arbitrary_ledger_formula(int s, Index m, Index k, Index xi1, Index xi2, Index affine_left,
                                       Index affine_right, ArbBranch branch, int attempts);

// Shared with the two-pass streaming algorithm.
DenseMatrix round_to_grid(const DenseMatrix& V, double rho);
DenseMatrix solve_low_rank_core(const DenseMatrix& M, const DenseMatrix& N, const DenseMatrix& L,
                                const DenseMatrix& C, Index k, OrthoBasis& U);

}  // namespace dpca
