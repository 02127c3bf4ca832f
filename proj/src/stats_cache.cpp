#include "fadkit/stats_cache.hpp"

#include <algorithm>

#include "binary_io.hpp"
#include "fadkit/error.hpp"
#include "file_util.hpp"

namespace fadkit {

void write_stats_cache(const std::filesystem::path& path, const GaussianFit& fit,
                       const ContentHash& source_hash) {
  fit.validate();
  const auto dim = static_cast<Eigen::Index>(fit.dim());
  detail::ByteWriter w;
  w.reserve(20 + 8 * (dim + dim * (dim + 1) / 2) + source_hash.size());
  w.bytes(kStatsMagic, 4);
  w.u32(kStatsVersion);
  w.u32(static_cast<std::uint32_t>(dim));
  w.u64(fit.count);
  for (Eigen::Index i = 0; i < dim; ++i) w.f64(fit.mean[i]);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) w.f64(fit.cov(i, j));
  w.bytes(source_hash.data(), source_hash.size());
  detail::write_file_bytes(path, w.buffer());
}

StatsCache read_stats_cache(const std::filesystem::path& path) {
  const std::string data = detail::read_file_bytes(path);
  detail::ByteReader r(data, path.string());
  if (r.bytes(4, "truncated header") != std::string_view(kStatsMagic, 4))
    throw Error(path.string() + ": bad magic");
  const std::uint32_t version = r.u32("truncated header");
  if (version != kStatsVersion)
    throw Error(path.string() + ": unsupported version " + std::to_string(version));
  const std::uint32_t dim = r.u32("truncated header");
  const std::uint64_t count = r.u64("truncated header");
  if (dim < 1) throw Error(path.string() + ": dim must be >= 1");
  const std::uint64_t n_values =
      static_cast<std::uint64_t>(dim) + static_cast<std::uint64_t>(dim) * (dim + 1) / 2;
  if (r.remaining() < n_values * 8 + 32) throw Error(path.string() + ": truncated payload");
  if (r.remaining() > n_values * 8 + 32)
    throw Error(path.string() + ": trailing bytes after payload");

  StatsCache cache;
  cache.fit.count = count;
  cache.fit.mean.resize(dim);
  cache.fit.cov.resize(dim, dim);
  for (std::uint32_t i = 0; i < dim; ++i) cache.fit.mean[i] = r.f64("truncated payload");
  for (std::uint32_t i = 0; i < dim; ++i)
    for (std::uint32_t j = 0; j <= i; ++j) {
      const double v = r.f64("truncated payload");
      cache.fit.cov(i, j) = v;
      cache.fit.cov(j, i) = v;
    }
  const auto hash = r.bytes(32, "truncated payload");
  std::copy(hash.begin(), hash.end(), cache.source_hash.begin());
  try {
    cache.fit.validate();
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return cache;
}

GaussianFit load_stats_cache(const std::filesystem::path& path,
                             const std::optional<std::filesystem::path>& source_dir) {
  StatsCache cache = read_stats_cache(path);
  if (source_dir) {
    const ContentHash actual = hash_set_directory(*source_dir);
    if (actual != cache.source_hash)
      throw Error(path.string() + ": stale stats cache: source hash " +
                  to_hex(cache.source_hash) + " does not match " + source_dir->string() +
                  " (" + to_hex(actual) + ")");
  }
  return std::move(cache.fit);
}

}  // namespace fadkit
