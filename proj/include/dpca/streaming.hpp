#pragma once

#include "dpca/dist_arbitrary.hpp"
#include "dpca/linalg.hpp"
#include "dpca/sketch.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace dpca {

// Turnstile update A(i, j) += x. Indices are 0-based here and 1-based in stream files.
struct StreamUpdate {
  Index i = 0;
  Index j = 0;
  double x = 0.0;
};

struct StreamData {
  Index m = 0;
  Index n = 0;
  std::vector<StreamUpdate> updates;
};

void validate_update(const StreamUpdate& u, Index m, Index n);

// Header "m n q", then q lines "i j x" with 1-based indices.
StreamData read_stream(std::istream& in);
StreamData read_stream_file(const std::string& path);
void write_stream(std::ostream& out, const StreamData& s);

// Materialized matrix, summing updates in arrival order.
DenseMatrix materialize(const StreamData& s);
// One update per nonzero entry, column by column.
StreamData stream_from_matrix(const DenseMatrix& A);

// A stream that can be read more than once.
class UpdateSource {
 public:
  virtual ~UpdateSource() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual void replay(const std::function<void(const StreamUpdate&)>& f) = 0;
};

class VectorSource : public UpdateSource {
 public:
  explicit VectorSource(StreamData data) : data_(std::move(data)) {}
  Index rows() const override { return data_.m; }
  Index cols() const override { return data_.n; }
  void replay(const std::function<void(const StreamUpdate&)>& f) override;
  const StreamData& data() const { return data_; }

 private:
  StreamData data_;
};

// Re-reads the file on every replay.
class FileSource : public UpdateSource {
 public:
  explicit FileSource(std::string path);
  Index rows() const override { return m_; }
  Index cols() const override { return n_; }
  void replay(const std::function<void(const StreamUpdate&)>& f) override;

 private:
  std::string path_;
  Index m_ = 0, n_ = 0;
};

struct OnePassParams {
  Index k = 1;
  double eps = 0.5;
  Index xi1 = 0;  // regression sketches, 0 selects ceil(10k/eps)
  Index xi2 = 0;
  Index xi3 = 0;  // affine sketches, 0 selects ceil(8k/eps^3) clamped to the padded dimension
  Index xi4 = 0;
  std::uint64_t seed = 0;

  Index left_regression() const { return xi1 ? xi1 : regression_size(k, eps); }
  Index right_regression() const { return xi2 ? xi2 : regression_size(k, eps); }
  Index affine_request() const;
  void validate() const;
};

// M = T_left A T_right, L = S A T_right, N = T_left A R, D = A R and optionally C = S A.
class TurnstileSketchState {
 public:
  TurnstileSketchState(Index m, Index n, const OnePassParams& p, bool keep_c = false);

  void update(const StreamUpdate& u);

  Index rows() const { return m_; }
  Index cols() const { return n_; }
  std::uint64_t update_count() const { return count_; }
  // Scalars held by the maintained sketches.
  std::uint64_t words() const;

  const DenseMatrix& M() const { return M_; }
  const DenseMatrix& L() const { return L_; }
  const DenseMatrix& N() const { return N_; }
  const DenseMatrix& D() const { return D_; }
  const DenseMatrix& C() const { return C_; }
  bool keeps_c() const { return keep_c_; }

  // The sketch matrices: S (xi1 x m), R (n x xi2), T_left (xi3 x m), T_right (n x xi4).
  DenseMatrix S() const { return S_; }
  DenseMatrix R() const { return Rt_.transpose(); }
  DenseMatrix T_left() const { return Tl_; }
  DenseMatrix T_right() const { return Trt_.transpose(); }
  Index xi1() const { return S_.rows(); }
  Index xi2() const { return Rt_.rows(); }
  Index xi3() const { return Tl_.rows(); }
  Index xi4() const { return Trt_.rows(); }

 private:
  Index m_, n_;
  bool keep_c_;
  std::uint64_t count_ = 0;
  DenseMatrix S_, Rt_, Tl_, Trt_;
  DenseMatrix M_, L_, N_, D_, C_;
};

// xi3*xi4 + xi1*xi4 + xi3*xi2 + m*xi2, plus xi1*n when C is kept.
std::uint64_t one_pass_space_words(Index m, Index n, Index xi1, Index xi2, Index xi3, Index xi4, bool keep_c);

struct OnePassResult {
  OrthoBasis U;
  std::uint64_t space_words = 0;
  Index xi1 = 0, xi2 = 0, xi3 = 0, xi4 = 0;
};

struct FactorizationResult {
  DenseMatrix T;  // m x k
  Vector sigma;   // k, non-increasing
  DenseMatrix K;  // k x n
  std::uint64_t space_words = 0;

  DenseMatrix dense() const { return T * sigma.asDiagonal() * K; }
};

OnePassResult one_pass_pca(UpdateSource& src, const OnePassParams& p);
FactorizationResult one_pass_factorization(UpdateSource& src, const OnePassParams& p);

// Final step shared by both one-pass outputs.
OnePassResult one_pass_finish(const TurnstileSketchState& st, Index k);
FactorizationResult one_pass_finish_factorization(const TurnstileSketchState& st, Index k);

struct TwoPassResult {
  OrthoBasis U;
  ArbBranch branch = ArbBranch::Smoothed;
  Index sketch_rank = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;          // transform seed, the first seed the distributed protocol agrees on
  std::uint64_t pass1_words = 0;   // rank-test sketch, C, S B T
  std::uint64_t pass2_words = 0;   // state of the chosen branch during the second pass
  std::uint64_t updates = 0;
};

// Noise level derived from the first-pass estimate of ||A||_F, as in default_noise.
double stream_default_noise(double frob_estimate, Index m, Index n);

// Throws StreamReplayError when the second pass differs from the first, and
// RetryWithNewSeed when the span certificate of the low-rank branch fails.
TwoPassResult two_pass_pca(UpdateSource& src, const ArbProtocolParams& p);

}  // namespace dpca
