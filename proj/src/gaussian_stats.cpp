#include "fadkit/gaussian_stats.hpp"

#include <algorithm>
#include <cmath>

#include "fadkit/error.hpp"
#include "fadkit/parallel.hpp"

namespace fadkit {

namespace {

constexpr Eigen::Index kBlockRows = 256;

Eigen::MatrixXd mirror_lower(const Eigen::MatrixXd& lower) {
  Eigen::MatrixXd full = lower.selfadjointView<Eigen::Lower>();
  return full;
}

}  // namespace

void GaussianFit::validate() const {
  if (count < 2) throw Error("count < 2: covariance undefined");
  if (mean.size() < 1) throw Error("fit has zero dimension");
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw Error("fit covariance shape does not match mean");
  if (!mean.allFinite() || !cov.allFinite()) throw Error("fit has non-finite entries");
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error("fit covariance is not symmetric");
}

GaussianStats::GaussianStats(int dim)
    : dim_(dim),
      origin_(Eigen::VectorXd::Zero(std::max(dim, 0))),
      offset_(Eigen::VectorXd::Zero(std::max(dim, 0))),
      scatter_(Eigen::MatrixXd::Zero(std::max(dim, 0), std::max(dim, 0))) {
  if (dim < 1) throw Error("dimension must be >= 1");
}

GaussianStats GaussianStats::from_fit(const GaussianFit& fit, CovarianceDivisor divisor) {
  fit.validate();
  GaussianStats s(fit.dim());
  s.count_ = fit.count;
  s.origin_ = fit.mean;
  const double denom = divisor == CovarianceDivisor::kUnbiased
                           ? static_cast<double>(fit.count - 1)
                           : static_cast<double>(fit.count);
  s.scatter_ = fit.cov.triangularView<Eigen::Lower>();
  s.scatter_ *= denom;
  return s;
}

void GaussianStats::check_frame(const Eigen::Ref<const Eigen::VectorXd>& frame) const {
  if (frame.size() != dim_)
    throw Error("dimension mismatch: frame has " + std::to_string(frame.size()) +
                " values, expected " + std::to_string(dim_));
  if (!frame.allFinite()) throw Error("non-finite frame");
}

void GaussianStats::accumulate(const Eigen::Ref<const Eigen::VectorXd>& frame) {
  check_frame(frame);
  if (count_ == 0) {
    origin_ = frame;
    offset_.setZero();
    count_ = 1;
    return;
  }
  ++count_;
  const Eigen::VectorXd delta = (frame - origin_) - offset_;
  const double n = static_cast<double>(count_);
  offset_ += delta / n;
  scatter_.selfadjointView<Eigen::Lower>().rankUpdate(delta, (n - 1.0) / n);
}

void GaussianStats::accumulate(std::span<const float> frame) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(frame.size()));
  for (std::size_t i = 0; i < frame.size(); ++i) v[static_cast<Eigen::Index>(i)] = frame[i];
  accumulate(v);
}

void GaussianStats::accumulate_frames(const FrameMatrix& frames) {
  if (frames.rows() == 0) return;
  if (frames.cols() != dim_)
    throw Error("dimension mismatch: frames have " + std::to_string(frames.cols()) +
                " columns, expected " + std::to_string(dim_));
  if (!frames.allFinite()) throw Error("non-finite frame");
  if (count_ == 0) {
    origin_ = frames.row(0).cast<double>().transpose();
    offset_.setZero();
  }

  Eigen::MatrixXd block;
  Eigen::MatrixXd block_scatter(dim_, dim_);
  for (Eigen::Index start = 0; start < frames.rows(); start += kBlockRows) {
    const Eigen::Index rows = std::min(kBlockRows, frames.rows() - start);
    block = frames.middleRows(start, rows).cast<double>();
    block.rowwise() -= origin_.transpose();
    const Eigen::VectorXd block_mean = block.colwise().mean().transpose();
    block.rowwise() -= block_mean.transpose();
    block_scatter.setZero();
    block_scatter.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
    add_block(static_cast<std::uint64_t>(rows), block_mean, block_scatter);
  }
}

void GaussianStats::add_block(std::uint64_t n, const Eigen::VectorXd& block_mean,
                              const Eigen::MatrixXd& block_scatter) {
  if (count_ == 0) {
    count_ = n;
    offset_ = block_mean;
    scatter_ = block_scatter.triangularView<Eigen::Lower>();
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(n);
  const double total = na + nb;
  const Eigen::VectorXd delta = block_mean - offset_;
  offset_ += delta * (nb / total);
  scatter_.triangularView<Eigen::Lower>() += block_scatter;
  scatter_.selfadjointView<Eigen::Lower>().rankUpdate(delta, na * nb / total);
  count_ += n;
}

void GaussianStats::merge(const GaussianStats& other) {
  if (other.dim_ != dim_)
    throw Error("dimension mismatch: cannot merge dim " + std::to_string(other.dim_) +
                " into dim " + std::to_string(dim_));
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  // Express the other mean relative to this origin.
  const Eigen::VectorXd other_offset = (other.origin_ - origin_) + other.offset_;
  add_block(other.count_, other_offset, other.scatter_);
}

Eigen::VectorXd GaussianStats::mean() const {
  if (count_ == 0) throw Error("count == 0: mean undefined");
  return origin_ + offset_;
}

Eigen::MatrixXd GaussianStats::covariance(CovarianceDivisor divisor) const {
  if (count_ < 2) throw Error("count < 2: covariance undefined");
  const double denom = divisor == CovarianceDivisor::kUnbiased
                           ? static_cast<double>(count_ - 1)
                           : static_cast<double>(count_);
  return mirror_lower(scatter_) / denom;
}

GaussianFit GaussianStats::fit(CovarianceDivisor divisor) const {
  return {count_, mean(), covariance(divisor)};
}

GaussianStats accumulate(GaussianStats stats, const Eigen::Ref<const Eigen::VectorXd>& frame) {
  stats.accumulate(frame);
  return stats;
}

GaussianStats merge(const GaussianStats& a, const GaussianStats& b) {
  GaussianStats out = a;
  out.merge(b);
  return out;
}

GaussianFit fit_frames(const FrameMatrix& frames) {
  GaussianStats s(static_cast<int>(frames.cols()));
  s.accumulate_frames(frames);
  return s.fit();
}

namespace {

GaussianStats tree_merge(std::vector<GaussianStats>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  GaussianStats left = tree_merge(parts, lo, mid);
  left.merge(tree_merge(parts, mid, hi));
  return left;
}

}  // namespace

GaussianStats accumulate_sets(std::span<const EmbeddingFrameSet> sets, int threads) {
  if (sets.empty()) throw Error("no frame sets to accumulate");
  const int dim = sets.front().dim();
  for (const auto& s : sets)
    if (s.dim() != dim)
      throw Error("dimension mismatch: song '" + s.song_id + "' has dim " +
                  std::to_string(s.dim()) + ", expected " + std::to_string(dim));
  std::vector<GaussianStats> parts(sets.size(), GaussianStats(dim));
  parallel_for(sets.size(), threads,
               [&](std::size_t i) { parts[i].accumulate_frames(sets[i].frames); });
  return tree_merge(parts, 0, parts.size());
}

}  // namespace fadkit
