#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fadkit/embedding_store.hpp"

namespace fadkit {

/// Divisor used when turning the accumulated scatter matrix into a
/// covariance. Unbiased (count - 1) is the default throughout the toolkit.
enum class CovarianceDivisor { kUnbiased, kBiased };

/// Finalized multinormal fit: what the distance and the stats cache consume.
struct GaussianFit {
  std::uint64_t count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }

  /// count >= 2, matching shapes, finite entries, cov symmetric within
  /// 1e-12 relative.
  void validate() const;
};

/// Single-pass, mergeable mean/covariance accumulator.
///
/// Updates are done relative to an origin (the first frame seen) so that
/// embeddings with a large common offset do not lose precision. Only the
/// lower triangle of the scatter matrix is maintained; covariance() mirrors
/// it, so results are symmetric by construction.
class GaussianStats {
 public:
  explicit GaussianStats(int dim);

  /// Rebuilds an accumulator from a finalized fit so it can be merged with
  /// further data.
  static GaussianStats from_fit(const GaussianFit& fit,
                                CovarianceDivisor divisor = CovarianceDivisor::kUnbiased);

  int dim() const { return dim_; }
  std::uint64_t count() const { return count_; }

  void accumulate(const Eigen::Ref<const Eigen::VectorXd>& frame);
  void accumulate(std::span<const float> frame);

  /// Adds every row of `frames`. Rows are folded in fixed-size blocks
  /// (two-pass inside a block, pairwise combination across blocks), so the
  /// result depends only on the frame order.
  void accumulate_frames(const FrameMatrix& frames);

  /// Adds the contents of another accumulator (parallel combination).
  void merge(const GaussianStats& other);

  Eigen::VectorXd mean() const;
  /// Throws "count < 2" when fewer than two frames were accumulated.
  Eigen::MatrixXd covariance(CovarianceDivisor divisor = CovarianceDivisor::kUnbiased) const;
  GaussianFit fit(CovarianceDivisor divisor = CovarianceDivisor::kUnbiased) const;

 private:
  void check_frame(const Eigen::Ref<const Eigen::VectorXd>& frame) const;
  void add_block(std::uint64_t n, const Eigen::VectorXd& block_mean,
                 const Eigen::MatrixXd& block_scatter);

  int dim_;
  std::uint64_t count_ = 0;
  Eigen::VectorXd origin_;
  Eigen::VectorXd offset_;   // mean - origin
  Eigen::MatrixXd scatter_;  // sum of outer products of deviations, lower triangle
};

/// Functional forms.
GaussianStats accumulate(GaussianStats stats, const Eigen::Ref<const Eigen::VectorXd>& frame);
GaussianStats merge(const GaussianStats& a, const GaussianStats& b);

/// Fits one set of frames, or several pooled together (accumulated per set,
/// then merged as a balanced tree in the given order).
GaussianFit fit_frames(const FrameMatrix& frames);
GaussianStats accumulate_sets(std::span<const EmbeddingFrameSet> sets, int threads = 0);

enum FadFlag : unsigned {
  kNegativeEigsClamped = 1u << 0,
  kTraceClamped = 1u << 1,
};

/// Eigenvalues in [-kEigenClampTolerance * scale, 0) are treated as zero;
/// anything more negative is reported as a numerical breakdown.
inline constexpr double kEigenClampTolerance = 1e-6;

struct FadScore {
  double value = 0;       // max(0, mean_term + trace_term)
  double mean_term = 0;   // squared distance between means
  double trace_term = 0;  // tr(S_ref + S_test - 2 sqrt(S_ref S_test))
  unsigned flags = 0;

  bool has(FadFlag f) const { return (flags & f) != 0; }
  /// Flag names joined by '|', empty when no flag is set.
  std::string flag_string() const;
};

std::vector<std::string> flag_names(unsigned flags);

/// Frechet distance between two multinormal fits. The square-root trace is
/// evaluated in the symmetric form tr sqrt(A S_test A) with A = S_ref^(1/2).
FadScore frechet_distance(const GaussianFit& ref, const GaussianFit& test);
FadScore frechet_distance(const GaussianStats& ref, const GaussianStats& test);

/// tr sqrt(a b) for symmetric PSD a, b. ORs clamp flags into `flags`.
double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          unsigned& flags);

}  // namespace fadkit
