#include "fadkit/embedding_store.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "binary_io.hpp"
#include "fadkit/error.hpp"
#include "file_util.hpp"

namespace fadkit {

void EmbeddingModelInfo::validate() const {
  if (name.empty()) throw Error("model name is empty");
  if (dim < 1) throw Error("model dim must be >= 1");
  if (sample_rate_hz < 1) throw Error("model sample_rate_hz must be >= 1");
  if (input_channels < 1) throw Error("model input_channels must be >= 1");
  if (!std::isfinite(hop_sec) || hop_sec < 0) throw Error("model hop_sec must be finite and >= 0");
  if (context_sec) {
    if (!std::isfinite(*context_sec) || *context_sec <= 0)
      throw Error("model context_sec must be positive");
    if (hop_sec <= 0) throw Error("model hop_sec must be > 0 with a finite context");
  }
}

EmbeddingModelInfo synthetic_model(int dim) {
  return {"synthetic", 1, 16000, dim, 1.0, 1.0};
}

void EmbeddingFrameSet::validate() const {
  model.validate();
  if (frames.rows() < 1) throw Error("frame set '" + song_id + "' has no frames");
  if (frames.cols() != model.dim)
    throw Error("frame set '" + song_id + "': row length " +
                std::to_string(frames.cols()) + " != model dim " +
                std::to_string(model.dim));
  if (!frames.allFinite()) throw Error("non-finite frame in '" + song_id + "'");
}

bool bit_identical(const FrameMatrix& a, const FrameMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(float) * a.size()) == 0;
}

bool bit_identical(const EmbeddingFrameSet& a, const EmbeddingFrameSet& b) {
  return a.song_id == b.song_id && a.model == b.model && bit_identical(a.frames, b.frames);
}

void write_frameset(const EmbeddingFrameSet& set, const std::filesystem::path& path) {
  set.validate();
  detail::ByteWriter w;
  w.reserve(kFrameHeaderBytes + sizeof(float) * set.frames.size());
  w.bytes(kFrameMagic, 4);
  w.u32(kFrameVersion);
  w.u32(static_cast<std::uint32_t>(set.frames.cols()));
  w.u64(static_cast<std::uint64_t>(set.frames.rows()));
  const float* p = set.frames.data();
  for (Eigen::Index i = 0; i < set.frames.size(); ++i) w.f32(p[i]);
  detail::write_file_bytes(path, w.buffer());
}

FrameMatrix read_frame_file(const std::filesystem::path& path,
                            std::optional<int> expected_dim) {
  const std::string data = detail::read_file_bytes(path);
  detail::ByteReader r(data, path.string());
  if (r.bytes(4, "truncated header") != std::string_view(kFrameMagic, 4))
    throw Error(path.string() + ": bad magic");
  const std::uint32_t version = r.u32("truncated header");
  if (version != kFrameVersion)
    throw Error(path.string() + ": unsupported version " + std::to_string(version));
  const std::uint32_t dim = r.u32("truncated header");
  const std::uint64_t n = r.u64("truncated header");
  if (dim < 1) throw Error(path.string() + ": dim must be >= 1");
  if (n < 1) throw Error(path.string() + ": no frames");
  if (expected_dim && static_cast<std::uint32_t>(*expected_dim) != dim)
    throw Error(path.string() + ": dim mismatch between header (" + std::to_string(dim) +
                ") and metadata (" + std::to_string(*expected_dim) + ")");
  if (n > r.remaining() / (sizeof(float) * dim))
    throw Error(path.string() + ": truncated payload");
  const std::uint64_t count = n * dim;
  if (r.remaining() != count * sizeof(float))
    throw Error(path.string() + ": trailing bytes after payload");

  FrameMatrix frames(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  float* out = frames.data();
  for (std::uint64_t i = 0; i < count; ++i) out[i] = r.f32("truncated payload");
  if (!frames.allFinite()) throw Error(path.string() + ": non-finite frame");
  return frames;
}

EmbeddingFrameSet read_frameset(const std::filesystem::path& path,
                                const EmbeddingModelInfo& model, std::string song_id) {
  model.validate();
  EmbeddingFrameSet set{model, std::move(song_id), read_frame_file(path, model.dim)};
  return set;
}

void SyntheticSpec::validate() const {
  if (dim < 1) throw Error("synthetic dim must be >= 1");
  if (n_frames < 1) throw Error("synthetic n_frames must be >= 1");
  if (mean.size() != dim) throw Error("synthetic mean length != dim");
  if (covariance.rows() != dim || covariance.cols() != dim)
    throw Error("synthetic covariance must be dim x dim");
  if (!mean.allFinite() || !covariance.allFinite())
    throw Error("synthetic spec has non-finite entries");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error("synthetic covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin < -1e-10 * std::max(lmax, 0.0) || (lmax <= 0 && lmin < 0))
    throw Error("synthetic covariance is not positive semidefinite");
}

namespace {

// Lower factor L with L L^T ~= cov.
Eigen::MatrixXd sampling_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double jitter = 1e-12 * cov.trace() / static_cast<double>(cov.rows());
  Eigen::MatrixXd jittered = cov;
  jittered.diagonal().array() += jitter;
  llt.compute(jittered);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  // Exactly singular (e.g. all-zero) covariance: factor through the spectrum.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

EmbeddingFrameSet generate_synthetic(const SyntheticSpec& spec, std::string song_id) {
  return generate_synthetic(spec, synthetic_model(spec.dim), std::move(song_id));
}

EmbeddingFrameSet generate_synthetic(const SyntheticSpec& spec,
                                     const EmbeddingModelInfo& model,
                                     std::string song_id) {
  spec.validate();
  if (model.dim != spec.dim) throw Error("synthetic model dim != spec dim");
  const Eigen::MatrixXd factor = sampling_factor(spec.covariance);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FrameMatrix frames(static_cast<Eigen::Index>(spec.n_frames), spec.dim);
  Eigen::VectorXd z(spec.dim);
  for (Eigen::Index i = 0; i < frames.rows(); ++i) {
    for (int j = 0; j < spec.dim; ++j) z[j] = normal(rng);
    frames.row(i) = (spec.mean + factor * z).cast<float>().transpose();
  }
  EmbeddingFrameSet set{model, std::move(song_id), std::move(frames)};
  set.validate();
  return set;
}

}  // namespace fadkit
