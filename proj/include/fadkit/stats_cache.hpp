#pragma once

#include <filesystem>
#include <optional>

#include "fadkit/gaussian_stats.hpp"
#include "fadkit/set_directory.hpp"

namespace fadkit {

// Stats cache layout (little-endian): "FADS", u32 version, u32 dim,
// u64 count, dim x binary64 mean, dim(dim+1)/2 x binary64 covariance lower
// triangle (row-major), 32-byte SHA-256 of the source set.

inline constexpr char kStatsMagic[4] = {'F', 'A', 'D', 'S'};
inline constexpr std::uint32_t kStatsVersion = 1;

struct StatsCache {
  GaussianFit fit;
  ContentHash source_hash{};
};

void write_stats_cache(const std::filesystem::path& path, const GaussianFit& fit,
                       const ContentHash& source_hash);

/// Parses a cache without checking its source.
StatsCache read_stats_cache(const std::filesystem::path& path);

/// Parses a cache and, unless `source_dir` is empty, checks that its stored
/// hash matches hash_set_directory(source_dir).
GaussianFit load_stats_cache(const std::filesystem::path& path,
                             const std::optional<std::filesystem::path>& source_dir);

}  // namespace fadkit
