#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "fadkit/error.hpp"
#include "fadkit/stats_cache.hpp"
#include "support/temp_dir.hpp"

using namespace fadkit;
using fadkit::test::TempDir;

namespace {

std::vector<EmbeddingFrameSet> make_songs(int count, int dim, std::uint64_t seed) {
  std::vector<EmbeddingFrameSet> songs;
  for (int i = 0; i < count; ++i) {
    SyntheticSpec spec;
    spec.dim = dim;
    spec.mean = Eigen::VectorXd::Constant(dim, 0.5 * i);
    spec.covariance = Eigen::MatrixXd::Identity(dim, dim);
    spec.n_frames = 40 + 7 * i;
    spec.seed = seed + i;
    songs.push_back(generate_synthetic(spec, synthetic_model(dim), "song" + std::to_string(i)));
  }
  return songs;
}

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(StatsCache, ReloadGivesBitIdenticalScore) {
  TempDir dir;
  const auto ref_songs = make_songs(3, 12, 1);
  const auto test_songs = make_songs(4, 12, 50);
  write_set(dir / "ref", synthetic_model(12), ref_songs);
  const auto fit = accumulate_sets(ref_songs).fit();
  const auto hash = hash_set_directory(dir / "ref");
  write_stats_cache(dir / "ref.fads", fit, hash);

  const auto loaded = load_stats_cache(dir / "ref.fads", dir / "ref");
  EXPECT_EQ(loaded.count, fit.count);
  EXPECT_EQ(loaded.mean, fit.mean);
  EXPECT_EQ(loaded.cov, fit.cov);

  const auto test_fit = accumulate_sets(test_songs).fit();
  const double direct = frechet_distance(fit, test_fit).value;
  const double cached = frechet_distance(loaded, test_fit).value;
  EXPECT_EQ(std::bit_cast<std::uint64_t>(direct), std::bit_cast<std::uint64_t>(cached));

  const auto raw = read_stats_cache(dir / "ref.fads");
  EXPECT_EQ(raw.source_hash, hash);
  const auto size = std::filesystem::file_size(dir / "ref.fads");
  EXPECT_EQ(size, 4u + 4 + 4 + 8 + 12 * 8 + 12 * 13 / 2 * 8 + 32);
}

TEST(StatsCache, RewriteIsByteIdentical) {
  TempDir dir;
  const auto songs = make_songs(2, 5, 3);
  const auto fit = accumulate_sets(songs).fit();
  write_stats_cache(dir / "a.fads", fit, ContentHash{});
  write_stats_cache(dir / "b.fads", load_stats_cache(dir / "a.fads", std::nullopt), ContentHash{});
  EXPECT_EQ(slurp(dir / "a.fads"), slurp(dir / "b.fads"));
}

TEST(StatsCache, StaleHashIsDetected) {
  TempDir dir;
  auto songs = make_songs(2, 4, 4);
  write_set(dir / "ref", synthetic_model(4), songs);
  write_stats_cache(dir / "ref.fads", accumulate_sets(songs).fit(), hash_set_directory(dir / "ref"));
  EXPECT_NO_THROW(load_stats_cache(dir / "ref.fads", dir / "ref"));

  songs[0].frames(0, 0) += 1.0f;
  write_set(dir / "ref", synthetic_model(4), songs);
  const auto msg = error_of([&] { load_stats_cache(dir / "ref.fads", dir / "ref"); });
  EXPECT_NE(msg.find("stale"), std::string::npos) << msg;
  EXPECT_NO_THROW(load_stats_cache(dir / "ref.fads", std::nullopt));
}

TEST(StatsCache, CorruptFilesAreRejected) {
  TempDir dir;
  const auto fit = accumulate_sets(make_songs(2, 3, 5)).fit();
  write_stats_cache(dir / "good.fads", fit, ContentHash{});
  const auto good = slurp(dir / "good.fads");

  auto bad_magic = good;
  bad_magic[0] = 'X';
  spit(dir / "x.fads", bad_magic);
  EXPECT_NE(error_of([&] { read_stats_cache(dir / "x.fads"); }).find("bad magic"), std::string::npos);

  auto version = good;
  version[4] = 9;
  spit(dir / "x.fads", version);
  EXPECT_NE(error_of([&] { read_stats_cache(dir / "x.fads"); }).find("version"), std::string::npos);

  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, good.size() - 1}) {
    spit(dir / "x.fads", std::vector<char>(good.begin(), good.begin() + static_cast<long>(cut)));
    EXPECT_FALSE(error_of([&] { read_stats_cache(dir / "x.fads"); }).empty()) << cut;
  }

  auto trailing = good;
  trailing.push_back(0);
  spit(dir / "x.fads", trailing);
  EXPECT_NE(error_of([&] { read_stats_cache(dir / "x.fads"); }).find("trailing"), std::string::npos);

  EXPECT_THROW(read_stats_cache(dir / "missing.fads"), Error);
}

TEST(StatsCache, RefusesToWriteInvalidFit) {
  TempDir dir;
  GaussianFit fit{1, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)};
  EXPECT_THROW(write_stats_cache(dir / "x.fads", fit, ContentHash{}), Error);
}
