#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace fadkit {

/// Frames as stored on disk: one embedding per row, binary32.
using FrameMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Metadata for the embedding model that produced a frame set.
struct EmbeddingModelInfo {
  std::string name;
  int input_channels = 1;
  int sample_rate_hz = 1;
  int dim = 1;
  /// Analysis window length in seconds; nullopt means the model has no
  /// bounded context (it sees the whole signal).
  std::optional<double> context_sec;
  double hop_sec = 1.0;

  void validate() const;
  bool operator==(const EmbeddingModelInfo&) const = default;
};

/// Rows of the evaluated-model table (VGGish, CLAP, L-CLAP, MERT, CDPAM,
/// EnCodec, EnCodec 48k, DAC).
const std::vector<EmbeddingModelInfo>& embedding_model_registry();
std::optional<EmbeddingModelInfo> find_embedding_model(std::string_view name);

/// Placeholder metadata for generated data of the given width.
EmbeddingModelInfo synthetic_model(int dim);

struct EmbeddingFrameSet {
  EmbeddingModelInfo model;
  std::string song_id;
  FrameMatrix frames;

  std::size_t n_frames() const { return static_cast<std::size_t>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }

  /// Throws unless N >= 1, every row has model.dim columns and every value is
  /// finite.
  void validate() const;
};

/// Bitwise equality, so that -0.0f and 0.0f are told apart.
bool bit_identical(const FrameMatrix& a, const FrameMatrix& b);
bool bit_identical(const EmbeddingFrameSet& a, const EmbeddingFrameSet& b);

/// Frame file layout (little-endian): "FADE", u32 version, u32 dim,
/// u64 n_frames, then n_frames*dim binary32 values row-major.
inline constexpr char kFrameMagic[4] = {'F', 'A', 'D', 'E'};
inline constexpr std::uint32_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 20;

void write_frameset(const EmbeddingFrameSet& set,
                    const std::filesystem::path& path);

/// Reads only the frame payload. When `expected_dim` is given the header dim
/// must match it.
FrameMatrix read_frame_file(const std::filesystem::path& path,
                            std::optional<int> expected_dim = std::nullopt);

/// Reads a frame file and attaches the metadata that lives in the set
/// manifest. Rejects a header dim that differs from model.dim.
EmbeddingFrameSet read_frameset(const std::filesystem::path& path,
                                const EmbeddingModelInfo& model,
                                std::string song_id);

struct SyntheticSpec {
  int dim = 1;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t n_frames = 1;
  std::uint64_t seed = 0;

  /// Symmetry within 1e-12 (relative to the largest entry) and eigenvalues
  /// no lower than -1e-10 times the largest one.
  void validate() const;
};

/// Draws n_frames i.i.d. multinormal rows. Pure function of the spec.
EmbeddingFrameSet generate_synthetic(const SyntheticSpec& spec,
                                     std::string song_id = "synthetic");
EmbeddingFrameSet generate_synthetic(const SyntheticSpec& spec,
                                     const EmbeddingModelInfo& model,
                                     std::string song_id);

}  // namespace fadkit
