#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fadkit/embedding_store.hpp"
#include "fadkit/gaussian_stats.hpp"

namespace fadkit {

// ---------------------------------------------------------------------------
// Set-level FAD

/// Pools every frame of `test` into one fit and measures it against `ref`.
/// Warns when there are fewer than dim+1 frames; fails below 2.
FadScore fad_set(const GaussianFit& ref, std::span<const EmbeddingFrameSet> test,
                 int threads = 0);

// ---------------------------------------------------------------------------
// FAD-infinity: bootstrap scores at several sample sizes, regress against
// 1/N, report the intercept.

enum class BootstrapUnit { kFrame, kSong };

inline constexpr int kDefaultRepeats = 5;
inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr std::size_t kDefaultGridPoints = 10;
/// Intercepts below -kUnstableFraction * (score at the smallest size) are
/// flagged as an unstable extrapolation.
inline constexpr double kUnstableFraction = 0.05;

struct FadInfOptions {
  std::vector<std::size_t> sizes;  // empty: default_size_grid
  int repeats = kDefaultRepeats;
  std::uint64_t seed = kDefaultSeed;
  BootstrapUnit unit = BootstrapUnit::kFrame;
  int threads = 0;
};

struct FadInfPoint {
  std::size_t size = 0;
  double mean_fad = 0;
};

struct FadInfEstimate {
  double fad_inf = 0;  // intercept at 1/N -> 0
  double slope = 0;    // bias coefficient
  std::vector<FadInfPoint> points;
  double r_squared = 0;
  std::uint64_t seed = 0;
  int repeats = 0;
  bool unstable = false;

  bool operator==(const FadInfEstimate&) const;
};

struct InverseSizeFit {
  double intercept = 0;
  double slope = 0;
  double r_squared = 0;
};

/// Ordinary least squares of mean_fad against 1/size.
InverseSizeFit fit_inverse_size(std::span<const FadInfPoint> points);

/// kDefaultGridPoints sizes, geometrically spaced from
/// max(2(dim+1), pool/64) to pool, rounded and de-duplicated.
std::vector<std::size_t> default_size_grid(std::size_t pool_size, int dim);

FadInfEstimate fad_infinity(const GaussianFit& ref, const FrameMatrix& pool,
                            const FadInfOptions& options = {});
/// Frame unit pools all songs (in the given order); song unit resamples
/// whole songs and sizes count songs.
FadInfEstimate fad_infinity(const GaussianFit& ref, std::span<const EmbeddingFrameSet> pool,
                            const FadInfOptions& options = {});

// ---------------------------------------------------------------------------
// Per-song scoring

struct SongScore {
  std::string song_id;
  double fad = 0;
  std::uint64_t n_frames = 0;
  std::size_t rank = 0;  // 1 = lowest FAD
  std::vector<std::string> flags;

  bool operator==(const SongScore&) const = default;
};

struct SkippedSong {
  std::string song_id;
  std::uint64_t n_frames = 0;
  bool operator==(const SkippedSong&) const = default;
};

inline constexpr const char* kSkippedFlag = "skipped";

struct SongScoreTable {
  std::vector<SongScore> rows;      // ascending by (fad, song_id), rank = position + 1
  std::vector<SkippedSong> skipped; // songs with fewer than two frames
  std::string reference_id;

  /// Sorts rows and reassigns ranks.
  void assign_ranks();
  std::size_t size() const { return rows.size(); }
  /// Number of rows whose score needed eigenvalue clamping.
  std::size_t clamped_count() const;
};

SongScoreTable per_song_scores(const GaussianFit& ref, std::span<const EmbeddingFrameSet> songs,
                               std::string reference_id = {}, int threads = 0);

/// round(fraction * n), half-up.
std::size_t extreme_count(std::size_t n, double fraction);

struct Extremes {
  std::size_t k = 0;
  std::vector<std::string> top;     // highest FAD first
  std::vector<std::string> bottom;  // lowest FAD first
};

/// Requires 0 < fraction < 0.5 and at least two scored songs.
Extremes select_extremes(const SongScoreTable& table, double fraction);

struct OutlierReport {
  std::string reference_id;
  std::size_t k = 0;
  std::size_t table_size = 0;
  std::vector<SongScore> highest;  // highest FAD first
  std::vector<SongScore> lowest;   // lowest FAD first

  std::string to_json() const;
  static OutlierReport from_json(const std::string& text);
  std::string to_text() const;
  bool operator==(const OutlierReport&) const = default;
};

/// k highest and k lowest songs; requires 1 <= k and 2k <= table size.
OutlierReport outlier_report(const SongScoreTable& table, std::size_t k);

/// CSV with header `song_id,fad,n_frames,rank,flags`; fad in shortest
/// round-trip form, flags joined by '|'. Skipped songs follow the ranked rows
/// with empty fad and rank.
void write_song_table_csv(std::ostream& out, const SongScoreTable& table);
SongScoreTable read_song_table_csv(std::istream& in, const std::string& source);

}  // namespace fadkit
