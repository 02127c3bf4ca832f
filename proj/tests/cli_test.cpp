#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fadkit/cli.hpp"
#include "fadkit/fad_estimators.hpp"
#include "fadkit/set_directory.hpp"
#include "support/temp_dir.hpp"

using namespace fadkit;
using fadkit::test::TempDir;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

// Synthesizes a set through the CLI itself.
void synth(const TempDir& dir, const std::string& name, int songs, int frames, int seed,
           double mean = 0.0, int dim = 4) {
  nlohmann::json spec;
  spec["dim"] = dim;
  spec["n_frames"] = frames;
  spec["seed"] = seed;
  spec["songs"] = songs;
  spec["mean"] = std::vector<double>(dim, mean);
  const auto spec_path = dir / (name + ".json");
  write_text(spec_path, spec.dump());
  const auto r = run({"synth", spec_path.string(), (dir / name).string()});
  ASSERT_EQ(r.code, 0) << r.err;
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    ::setenv(name, value, 1);
  }
  ~ScopedEnv() {
    if (old_) ::setenv(name_, old_->c_str(), 1);
    else ::unsetenv(name_);
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"stats"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, StatsWritesReproducibleCache) {
  TempDir dir;
  synth(dir, "ref", 2, 50, 1);
  const auto r1 = run({"stats", (dir / "ref").string(), "-o", (dir / "a.fads").string()});
  ASSERT_EQ(r1.code, 0) << r1.err;
  EXPECT_NE(r1.out.find("frames: 100"), std::string::npos) << r1.out;
  const auto r2 = run({"stats", (dir / "ref").string(), "-o", (dir / "b.fads").string()});
  ASSERT_EQ(r2.code, 0);
  EXPECT_EQ(read_text(dir / "a.fads"), read_text(dir / "b.fads"));
}

TEST(Cli, EmptySetIsAnError) {
  TempDir dir;
  std::filesystem::create_directories(dir / "empty");
  const auto r = run({"stats", (dir / "empty").string(), "-o", (dir / "x.fads").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind(kErrorPrefix, 0), 0u) << r.err;
  EXPECT_NE(r.err.find("no songs"), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(dir / "x.fads"));
}

TEST(Cli, ScoreIdenticalSetsIsZero) {
  TempDir dir;
  synth(dir, "ref", 3, 60, 2);
  const auto r = run({"score", "--ref", (dir / "ref").string(), (dir / "ref").string(),
                      "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_LT(j.at("fad").get<double>(), 1e-9);
  EXPECT_EQ(j.at("songs").get<int>(), 3);
  EXPECT_TRUE(j.contains("config"));
}

TEST(Cli, ScoreFromCacheNeedsVerification) {
  TempDir dir;
  synth(dir, "ref", 2, 80, 3);
  synth(dir, "test", 2, 80, 30, 1.0);
  ASSERT_EQ(run({"stats", (dir / "ref").string(), "-o", (dir / "ref.fads").string()}).code, 0);
  const auto missing = run({"score", "--ref", (dir / "ref.fads").string(), (dir / "test").string()});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("--ref-set"), std::string::npos);

  const auto direct = run({"score", "--ref", (dir / "ref").string(), (dir / "test").string(),
                           "--format", "csv"});
  const auto cached = run({"score", "--ref", (dir / "ref.fads").string(), "--ref-set",
                           (dir / "ref").string(), (dir / "test").string(), "--format", "csv"});
  const auto unchecked = run({"score", "--ref", (dir / "ref.fads").string(), "--no-verify",
                              (dir / "test").string(), "--format", "csv"});
  ASSERT_EQ(direct.code, 0) << direct.err;
  ASSERT_EQ(cached.code, 0) << cached.err;
  ASSERT_EQ(unchecked.code, 0) << unchecked.err;
  EXPECT_EQ(direct.out, cached.out);
  EXPECT_EQ(direct.out, unchecked.out);

  synth(dir, "ref", 2, 80, 4);  // regenerate with different content
  const auto stale = run({"score", "--ref", (dir / "ref.fads").string(), "--ref-set",
                          (dir / "ref").string(), (dir / "test").string()});
  EXPECT_EQ(stale.code, 1);
  EXPECT_NE(stale.err.find("stale"), std::string::npos) << stale.err;
}

TEST(Cli, ScoreInfinity) {
  TempDir dir;
  synth(dir, "ref", 4, 200, 5);
  synth(dir, "test", 4, 200, 50, 0.3);
  const auto ok = run({"score", "--ref", (dir / "ref").string(), (dir / "test").string(), "--inf",
                       "--sizes", "100,200,400,800", "--format", "json"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  const auto j = nlohmann::json::parse(ok.out);
  EXPECT_EQ(j.at("points").size(), 4u);
  EXPECT_EQ(j.at("config").at("seed"), "42");

  const auto one = run({"score", "--ref", (dir / "ref").string(), (dir / "test").string(), "--inf",
                        "--sizes", "100"});
  EXPECT_EQ(one.code, 1);
  EXPECT_NE(one.err.find("need >= 2 distinct sizes"), std::string::npos);

  const auto song_unit = run({"score", "--ref", (dir / "ref").string(), (dir / "test").string(),
                              "--inf", "--unit", "song", "--sizes", "2,4"});
  ASSERT_EQ(song_unit.code, 0) << song_unit.err;
  const auto three = run({"score", "--ref", (dir / "ref").string(), (dir / "test").string(),
                          "--inf", "--unit", "song", "--sizes", "2,3"});
  EXPECT_EQ(three.code, 0) << three.err;
  const auto bad_unit = run({"score", "--ref", (dir / "ref").string(), (dir / "test").string(),
                             "--inf", "--unit", "bar"});
  EXPECT_EQ(bad_unit.code, 2);

  EXPECT_EQ(run({"score", "--ref", (dir / "ref").string(), (dir / "test").string(), "--seed", "1"}).code, 2);
}

TEST(Cli, SongsTableAndOutliers) {
  TempDir dir;
  synth(dir, "ref", 1, 2000, 6);
  synth(dir, "test", 300, 12, 60, 0.2);
  const auto r = run({"songs", "--ref", (dir / "ref").string(), (dir / "test").string(), "-o",
                      (dir / "table.csv").string(), "--report", (dir / "report.json").string(),
                      "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("scored").get<int>(), 300);
  EXPECT_EQ(j.at("extremes").at("k").get<int>(), 15);
  const auto report = OutlierReport::from_json(read_text(dir / "report.json"));
  EXPECT_EQ(report.highest.size() + report.lowest.size(), 10u);
  std::ifstream table_in(dir / "table.csv");
  const auto table = read_song_table_csv(table_in, "table.csv");
  EXPECT_EQ(table.rows.size(), 300u);
  EXPECT_EQ(report.highest.front(), table.rows.back());
}

TEST(Cli, UnreadableSongIsNamed) {
  TempDir dir;
  synth(dir, "test", 3, 10, 7);
  synth(dir, "ref", 1, 100, 8);
  const auto manifest = read_manifest(dir / "test");
  write_text(dir / "test" / manifest.songs[1].file, "garbage");
  const auto r = run({"songs", "--ref", (dir / "ref").string(), (dir / "test").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find(manifest.songs[1].file), std::string::npos) << r.err;
}

TEST(Cli, EvalLabels) {
  TempDir dir;
  std::string table = "song_id,fad,n_frames,rank,flags\n";
  std::string labels = "song_id,aq,mq\n";
  for (int i = 0; i < 20; ++i) {
    const std::string id = "s" + std::to_string(10 + i);
    table += id + "," + std::to_string(i) + ",10," + std::to_string(i + 1) + ",\n";
    labels += id + "," + (i == 19 ? "low" : "medium") + "," + (i == 0 ? "high" : "low") + "\n";
  }
  write_text(dir / "t.csv", table);
  write_text(dir / "l.csv", labels);
  const auto r = run({"eval", "labels", "--scores", (dir / "t.csv").string(), "--labels",
                      (dir / "l.csv").string(), "--fraction", "0.05", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("aq_low").at("f1").get<double>(), 1.0);
  EXPECT_EQ(j.at("mq_high").at("precision").get<double>(), 1.0);

  const auto bad = run({"eval", "labels", "--scores", (dir / "t.csv").string(), "--labels",
                        (dir / "l.csv").string(), "--fraction", "0.5"});
  EXPECT_EQ(bad.code, 1);
}

TEST(Cli, EvalMos) {
  TempDir dir;
  write_text(dir / "t.csv",
             "song_id,fad,n_frames,rank,flags\na,1,5,1,\nb,2,5,2,\nc,3,5,3,\n");
  write_text(dir / "m.csv",
             "song_id,testset,aq_mos,mq_mos\na,x,5,3\nb,x,4,3\nc,x,3,3\n");
  const auto r = run({"eval", "mos", "--scores", (dir / "t.csv").string(), "--mos",
                      (dir / "m.csv").string(), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("aq_pcc").at("x").get<double>(), -1.0, 1e-12);
  EXPECT_EQ(j.at("mq_pcc").at("x"), "undefined");
}

TEST(Cli, EvalSensitivity) {
  TempDir dir;
  write_text(dir / "s.csv", "effect,fad\nclean,2\nreverb,5\nlowpass,3\n");
  const auto r = run({"eval", "sensitivity", "--scores", (dir / "s.csv").string(), "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "effect,relative_fad\nlowpass,1.5\nreverb,2.5\n");
  write_text(dir / "bad.csv", "effect,fad\nreverb,5\n");
  EXPECT_EQ(run({"eval", "sensitivity", "--scores", (dir / "bad.csv").string()}).code, 1);
}

TEST(Cli, OutputIndependentOfThreadCount) {
  TempDir dir;
  synth(dir, "ref", 5, 300, 9, 0.0, 6);
  synth(dir, "test", 40, 25, 90, 0.1, 6);
  auto run_all = [&](const char* threads) {
    ScopedEnv env("FADKIT_THREADS", threads);
    std::string all;
    const std::string cache = (dir / (std::string("ref") + threads + ".fads")).string();
    const auto s = run({"stats", (dir / "ref").string(), "-o", cache});
    EXPECT_EQ(s.code, 0) << s.err;
    all += read_text(cache);
    for (std::vector<std::string> args :
         {std::vector<std::string>{"score", "--ref", cache, "--no-verify", (dir / "test").string(),
                                   "--format", "csv"},
          std::vector<std::string>{"score", "--ref", (dir / "ref").string(), (dir / "test").string(),
                                   "--inf", "--format", "csv"},
          std::vector<std::string>{"songs", "--ref", (dir / "ref").string(), (dir / "test").string(),
                                   "--format", "csv"}}) {
      const auto r = run(args);
      EXPECT_EQ(r.code, 0) << r.err;
      all += r.out;
    }
    return all;
  };
  const auto one = run_all("1");
  const auto four = run_all("4");
  EXPECT_EQ(one, four);
  EXPECT_GT(one.size(), 1000u);
}
