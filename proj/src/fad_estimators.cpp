#include "fadkit/fad_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fadkit/error.hpp"
#include "fadkit/log.hpp"
#include "fadkit/parallel.hpp"

namespace fadkit {

FadScore fad_set(const GaussianFit& ref, std::span<const EmbeddingFrameSet> test, int threads) {
  if (test.empty()) throw Error("empty test set");
  std::uint64_t total = 0;
  for (const auto& song : test) {
    if (song.dim() != ref.dim())
      throw Error("dimension mismatch: song '" + song.song_id + "' has dim " +
                  std::to_string(song.dim()) + ", reference has dim " +
                  std::to_string(ref.dim()));
    total += song.n_frames();
  }
  if (total < 2)
    throw Error("test set has " + std::to_string(total) + " frame(s); need at least 2");
  if (total < static_cast<std::uint64_t>(ref.dim()) + 1)
    warn("test set has " + std::to_string(total) + " frames for dim " +
         std::to_string(ref.dim()) + "; covariance is rank deficient");
  return frechet_distance(ref, accumulate_sets(test, threads).fit());
}

// ---------------------------------------------------------------------------

bool FadInfEstimate::operator==(const FadInfEstimate& o) const {
  if (points.size() != o.points.size()) return false;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].size != o.points[i].size || points[i].mean_fad != o.points[i].mean_fad)
      return false;
  return fad_inf == o.fad_inf && slope == o.slope && r_squared == o.r_squared &&
         seed == o.seed && repeats == o.repeats && unstable == o.unstable;
}

InverseSizeFit fit_inverse_size(std::span<const FadInfPoint> points) {
  std::set<std::size_t> distinct;
  for (const auto& p : points) {
    if (p.size == 0) throw Error("sample size must be positive");
    distinct.insert(p.size);
  }
  if (distinct.size() < 2) throw Error("need >= 2 distinct sizes");

  const double n = static_cast<double>(points.size());
  double mean_x = 0, mean_y = 0;
  for (const auto& p : points) {
    mean_x += 1.0 / static_cast<double>(p.size);
    mean_y += p.mean_fad;
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : points) {
    const double dx = 1.0 / static_cast<double>(p.size) - mean_x;
    const double dy = p.mean_fad - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  InverseSizeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  double ss_res = 0;
  for (const auto& p : points) {
    const double r = p.mean_fad - (fit.intercept + fit.slope / static_cast<double>(p.size));
    ss_res += r * r;
  }
  fit.r_squared = syy > 0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

namespace {

std::vector<std::size_t> geometric_grid(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> sizes;
  const double ratio = std::log(static_cast<double>(hi) / static_cast<double>(lo));
  for (std::size_t i = 0; i < kDefaultGridPoints; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(kDefaultGridPoints - 1);
    sizes.push_back(static_cast<std::size_t>(
        std::llround(static_cast<double>(lo) * std::exp(ratio * t))));
  }
  sizes.front() = lo;
  sizes.back() = hi;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  return sizes;
}

std::vector<std::size_t> normalized_sizes(std::vector<std::size_t> sizes, std::size_t lo,
                                          std::size_t hi, const char* unit) {
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  if (sizes.size() < 2) throw Error("need >= 2 distinct sizes");
  for (auto s : sizes)
    if (s < lo || s > hi)
      throw Error("sample size " + std::to_string(s) + " outside [" + std::to_string(lo) +
                  ", " + std::to_string(hi) + "] " + unit);
  return sizes;
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::size_t size_index, int repeat) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(size_index), static_cast<std::uint32_t>(repeat)};
  return std::mt19937_64(seq);
}

// Runs the bootstrap for every (size, repeat) pair and regresses the
// per-size averages. `score_sample` maps (size, rng) to a FAD value.
template <typename ScoreSample>
FadInfEstimate run_bootstrap(const std::vector<std::size_t>& sizes, const FadInfOptions& options,
                             ScoreSample&& score_sample) {
  if (options.repeats < 1) throw Error("repeats must be >= 1");
  const std::size_t repeats = static_cast<std::size_t>(options.repeats);
  std::vector<double> scores(sizes.size() * repeats);
  parallel_for(scores.size(), options.threads, [&](std::size_t task) {
    const std::size_t size_index = task / repeats;
    const int repeat = static_cast<int>(task % repeats);
    auto rng = derived_rng(options.seed, size_index, repeat);
    scores[task] = score_sample(sizes[size_index], rng);
  });

  FadInfEstimate est;
  est.seed = options.seed;
  est.repeats = options.repeats;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    double sum = 0;
    for (std::size_t r = 0; r < repeats; ++r) sum += scores[i * repeats + r];
    est.points.push_back({sizes[i], sum / static_cast<double>(repeats)});
  }
  const InverseSizeFit fit = fit_inverse_size(est.points);
  est.fad_inf = fit.intercept;
  est.slope = fit.slope;
  est.r_squared = fit.r_squared;
  est.unstable = est.fad_inf < -kUnstableFraction * est.points.front().mean_fad;
  if (est.unstable)
    warn("extrapolation unstable: intercept " + std::to_string(est.fad_inf) +
         " is below -5% of the smallest-size score");
  return est;
}

}  // namespace

std::vector<std::size_t> default_size_grid(std::size_t pool_size, int dim) {
  const std::size_t lo =
      std::max<std::size_t>(2 * (static_cast<std::size_t>(dim) + 1), pool_size / 64);
  if (lo >= pool_size)
    throw Error("pool of " + std::to_string(pool_size) + " is too small for a size grid");
  return geometric_grid(lo, pool_size);
}

FadInfEstimate fad_infinity(const GaussianFit& ref, const FrameMatrix& pool,
                            const FadInfOptions& options) {
  if (options.unit != BootstrapUnit::kFrame)
    throw Error("song-unit bootstrap needs per-song frame sets");
  ref.validate();
  const int dim = ref.dim();
  if (pool.cols() != dim)
    throw Error("dimension mismatch: pool has dim " + std::to_string(pool.cols()) +
                ", reference has dim " + std::to_string(dim));
  const std::size_t n_total = static_cast<std::size_t>(pool.rows());
  const std::size_t min_pool = 4 * (static_cast<std::size_t>(dim) + 1);
  if (n_total < min_pool)
    throw Error("pool has " + std::to_string(n_total) + " frames; need at least " +
                std::to_string(min_pool) + " (4 * (dim + 1))");
  const std::vector<std::size_t> sizes =
      normalized_sizes(options.sizes.empty() ? default_size_grid(n_total, dim) : options.sizes,
                       static_cast<std::size_t>(dim) + 2, n_total, "frames");

  return run_bootstrap(sizes, options, [&](std::size_t size, std::mt19937_64& rng) {
    std::uniform_int_distribution<Eigen::Index> pick(0, pool.rows() - 1);
    FrameMatrix sample(static_cast<Eigen::Index>(size), dim);
    for (Eigen::Index r = 0; r < sample.rows(); ++r) sample.row(r) = pool.row(pick(rng));
    GaussianStats stats(dim);
    stats.accumulate_frames(sample);
    return frechet_distance(ref, stats.fit()).value;
  });
}

FadInfEstimate fad_infinity(const GaussianFit& ref, std::span<const EmbeddingFrameSet> pool,
                            const FadInfOptions& options) {
  if (pool.empty()) throw Error("empty test set");
  for (const auto& song : pool)
    if (song.dim() != ref.dim())
      throw Error("dimension mismatch: song '" + song.song_id + "' has dim " +
                  std::to_string(song.dim()) + ", reference has dim " +
                  std::to_string(ref.dim()));

  if (options.unit == BootstrapUnit::kFrame) {
    Eigen::Index total = 0;
    for (const auto& song : pool) total += song.frames.rows();
    FrameMatrix frames(total, ref.dim());
    Eigen::Index at = 0;
    for (const auto& song : pool) {
      frames.middleRows(at, song.frames.rows()) = song.frames;
      at += song.frames.rows();
    }
    return fad_infinity(ref, frames, options);
  }

  ref.validate();
  const std::size_t n_songs = pool.size();
  if (n_songs < 4) throw Error("song-unit bootstrap needs at least 4 songs");
  std::vector<std::size_t> sizes = options.sizes;
  if (sizes.empty()) {
    sizes = geometric_grid(std::max<std::size_t>(2, n_songs / 64), n_songs);
  }
  sizes = normalized_sizes(std::move(sizes), 2, n_songs, "songs");

  return run_bootstrap(sizes, options, [&](std::size_t size, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, n_songs - 1);
    GaussianStats stats(ref.dim());
    for (std::size_t i = 0; i < size; ++i) stats.accumulate_frames(pool[pick(rng)].frames);
    if (stats.count() < 2)
      throw Error("song-unit bootstrap sample of " + std::to_string(size) +
                  " songs has fewer than 2 frames");
    return frechet_distance(ref, stats.fit()).value;
  });
}

// ---------------------------------------------------------------------------

void SongScoreTable::assign_ranks() {
  std::sort(rows.begin(), rows.end(), [](const SongScore& a, const SongScore& b) {
    if (a.fad != b.fad) return a.fad < b.fad;
    return a.song_id < b.song_id;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = i + 1;
  std::sort(skipped.begin(), skipped.end(),
            [](const SkippedSong& a, const SkippedSong& b) { return a.song_id < b.song_id; });
}

std::size_t SongScoreTable::clamped_count() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SongScore& r) {
    return std::find(r.flags.begin(), r.flags.end(), "negative-eigs-clamped") != r.flags.end();
  }));
}

SongScoreTable per_song_scores(const GaussianFit& ref, std::span<const EmbeddingFrameSet> songs,
                               std::string reference_id, int threads) {
  if (songs.empty()) throw Error("empty song collection");
  ref.validate();
  std::set<std::string> ids;
  for (const auto& song : songs) {
    if (song.dim() != ref.dim())
      throw Error("dimension mismatch: song '" + song.song_id + "' has dim " +
                  std::to_string(song.dim()) + ", reference has dim " +
                  std::to_string(ref.dim()));
    if (!ids.insert(song.song_id).second)
      throw Error("duplicate song id '" + song.song_id + "'");
  }

  std::vector<std::optional<SongScore>> scored(songs.size());
  parallel_for(songs.size(), threads, [&](std::size_t i) {
    const auto& song = songs[i];
    if (song.n_frames() < 2) return;
    try {
      const FadScore score = frechet_distance(ref, fit_frames(song.frames));
      scored[i] = SongScore{song.song_id, score.value, song.n_frames(), 0,
                            flag_names(score.flags)};
    } catch (const Error& e) {
      throw Error("song '" + song.song_id + "': " + e.what());
    }
  });

  SongScoreTable table;
  table.reference_id = std::move(reference_id);
  for (std::size_t i = 0; i < songs.size(); ++i) {
    if (scored[i])
      table.rows.push_back(std::move(*scored[i]));
    else
      table.skipped.push_back({songs[i].song_id, songs[i].n_frames()});
  }
  table.assign_ranks();
  return table;
}

std::size_t extreme_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

Extremes select_extremes(const SongScoreTable& table, double fraction) {
  if (!(fraction > 0.0 && fraction < 0.5))
    throw Error("fraction must satisfy 0 < fraction < 0.5, got " + std::to_string(fraction));
  if (table.rows.size() < 2)
    throw Error("need at least 2 scored songs, table has " + std::to_string(table.rows.size()));
  Extremes out;
  out.k = extreme_count(table.rows.size(), fraction);
  for (std::size_t i = 0; i < out.k; ++i) {
    out.bottom.push_back(table.rows[i].song_id);
    out.top.push_back(table.rows[table.rows.size() - 1 - i].song_id);
  }
  return out;
}

OutlierReport outlier_report(const SongScoreTable& table, std::size_t k) {
  if (k < 1) throw Error("k must be >= 1");
  if (2 * k > table.rows.size())
    throw Error("k = " + std::to_string(k) + " needs at least " + std::to_string(2 * k) +
                " scored songs, table has " + std::to_string(table.rows.size()));
  OutlierReport report;
  report.reference_id = table.reference_id;
  report.k = k;
  report.table_size = table.rows.size();
  for (std::size_t i = 0; i < k; ++i) {
    report.lowest.push_back(table.rows[i]);
    report.highest.push_back(table.rows[table.rows.size() - 1 - i]);
  }
  return report;
}

}  // namespace fadkit
