#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "fadkit/cli.hpp"
#include "fadkit/csv.hpp"
#include "fadkit/error.hpp"
#include "fadkit/eval_metrics.hpp"
#include "fadkit/fad_estimators.hpp"
#include "fadkit/set_directory.hpp"
#include "fadkit/stats_cache.hpp"

namespace fadkit {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

enum class Format { kText, kJson, kCsv };

struct RunConfig {
  std::string command;
  std::string eval_mode;
  std::string ref;      // stats cache file or set directory
  std::string ref_set;  // set directory used to verify a cache
  bool no_verify = false;
  std::string test_dir;
  std::string out;
  std::string report;
  bool inf = false;
  std::vector<std::size_t> sizes;
  int repeats = kDefaultRepeats;
  std::uint64_t seed = kDefaultSeed;
  std::string unit = "frame";
  double fraction = 0.05;
  std::size_t top_k = 5;
  std::string scores;
  std::string labels;
  std::string mos;
  std::string spec;
  Format format = Format::kText;
};

void validate(const RunConfig& cfg) {
  if (cfg.command == "score" || cfg.command == "songs") {
    if (!fs::exists(cfg.ref)) throw Error("reference " + cfg.ref + " does not exist");
    if (!fs::is_directory(cfg.ref) && !cfg.no_verify && cfg.ref_set.empty())
      throw Error("cannot verify stats cache " + cfg.ref +
                  ": pass --ref-set DIR or --no-verify");
  }
  if (cfg.command == "score" && cfg.inf) {
    std::set<std::size_t> distinct(cfg.sizes.begin(), cfg.sizes.end());
    if (!cfg.sizes.empty() && distinct.size() < 2) throw Error("need >= 2 distinct sizes");
    if (cfg.repeats < 1) throw Error("--repeats must be >= 1");
  }
  if (cfg.command == "songs" || (cfg.command == "eval" && cfg.eval_mode == "labels")) {
    if (!(cfg.fraction > 0.0 && cfg.fraction < 0.5))
      throw Error("--fraction must satisfy 0 < F < 0.5");
  }
  if (cfg.command == "songs" && cfg.top_k < 1) throw Error("--top-k must be >= 1");
  if (cfg.command == "stats" && cfg.out.empty()) throw Error("stats needs -o/--out");
}

std::string fmt6(double v) { return fmt::format("{:.6g}", v); }

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (auto s : sizes) out += (out.empty() ? "" : ",") + std::to_string(s);
  return out;
}

void emit(const std::string& path, std::ostream& out, const std::string& content) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot open " + path + " for writing");
  file << content;
  file.flush();
  if (!file) throw Error("write failed: " + path);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

struct Reference {
  GaussianFit fit;
  std::string id;
};

Reference load_reference(const RunConfig& cfg) {
  if (fs::is_directory(cfg.ref)) {
    const auto songs = read_set(cfg.ref);
    return {accumulate_sets(songs).fit(), cfg.ref};
  }
  std::optional<fs::path> source;
  if (!cfg.no_verify) source = cfg.ref_set;
  return {load_stats_cache(cfg.ref, source), cfg.ref};
}

std::string text_header(const std::string& title,
                        const std::vector<std::pair<std::string, std::string>>& config) {
  std::string out = "# fadkit " + title + "\n";
  for (const auto& [k, v] : config) out += "# " + k + ": " + v + "\n";
  return out;
}

ordered_json json_config(const std::vector<std::pair<std::string, std::string>>& config) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : config) j[k] = v;
  return j;
}

std::string csv_rows(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) csv::write_row(out, r);
  return out.str();
}

// --- stats ------------------------------------------------------------------

void cmd_stats(const RunConfig& cfg, std::ostream& out) {
  const auto songs = read_set(cfg.test_dir);
  const GaussianFit fit = accumulate_sets(songs).fit();
  const ContentHash hash = hash_set_directory(cfg.test_dir);
  write_stats_cache(cfg.out, fit, hash);

  std::vector<std::pair<std::string, std::string>> config = {
      {"set", cfg.test_dir}, {"cache", cfg.out}};
  const std::string hex = to_hex(hash);
  switch (cfg.format) {
    case Format::kJson: {
      ordered_json j;
      j["config"] = json_config(config);
      j["songs"] = songs.size();
      j["dim"] = fit.dim();
      j["count"] = fit.count;
      j["source_hash"] = hex;
      out << j.dump(2) << "\n";
      break;
    }
    case Format::kCsv:
      out << csv_rows({{"metric", "value"},
                       {"songs", std::to_string(songs.size())},
                       {"dim", std::to_string(fit.dim())},
                       {"count", std::to_string(fit.count)},
                       {"source_hash", hex}});
      break;
    case Format::kText:
      out << text_header("stats", config)
          << fmt::format("songs: {}\ndim: {}\nframes: {}\nsource hash: {}\n", songs.size(),
                         fit.dim(), fit.count, hex);
      break;
  }
}

// --- score ------------------------------------------------------------------

void cmd_score(const RunConfig& cfg, std::ostream& out) {
  const Reference ref = load_reference(cfg);
  const auto songs = read_set(cfg.test_dir);
  std::uint64_t frames = 0;
  for (const auto& s : songs) frames += s.n_frames();

  std::vector<std::pair<std::string, std::string>> config = {
      {"reference", ref.id}, {"test", cfg.test_dir}, {"mode", cfg.inf ? "fad-inf" : "fad"}};

  if (!cfg.inf) {
    const FadScore score = fad_set(ref.fit, songs);
    std::string content;
    switch (cfg.format) {
      case Format::kJson: {
        ordered_json j;
        j["config"] = json_config(config);
        j["fad"] = score.value;
        j["mean_term"] = score.mean_term;
        j["trace_term"] = score.trace_term;
        j["flags"] = flag_names(score.flags);
        j["songs"] = songs.size();
        j["frames"] = frames;
        content = j.dump(2) + "\n";
        break;
      }
      case Format::kCsv:
        content = csv_rows({{"metric", "value"},
                            {"fad", csv::format_roundtrip(score.value)},
                            {"mean_term", csv::format_roundtrip(score.mean_term)},
                            {"trace_term", csv::format_roundtrip(score.trace_term)},
                            {"flags", score.flag_string()},
                            {"songs", std::to_string(songs.size())},
                            {"frames", std::to_string(frames)}});
        break;
      case Format::kText:
        content = text_header("score", config) +
                  fmt::format("fad: {}\nmean term: {}\ntrace term: {}\nsongs: {}\nframes: {}\n",
                              fmt6(score.value), fmt6(score.mean_term), fmt6(score.trace_term),
                              songs.size(), frames);
        if (score.flags) content += "flags: " + score.flag_string() + "\n";
        break;
    }
    emit(cfg.out, out, content);
    return;
  }

  FadInfOptions options;
  options.sizes = cfg.sizes;
  options.repeats = cfg.repeats;
  options.seed = cfg.seed;
  if (cfg.unit == "song") options.unit = BootstrapUnit::kSong;
  const FadInfEstimate est = fad_infinity(ref.fit, songs, options);

  std::vector<std::size_t> used;
  for (const auto& p : est.points) used.push_back(p.size);
  config.push_back({"sizes", join_sizes(used) + (cfg.sizes.empty() ? " (default grid)" : "")});
  config.push_back({"repeats", std::to_string(est.repeats)});
  config.push_back({"seed", std::to_string(est.seed)});
  config.push_back({"unit", cfg.unit});

  std::string content;
  switch (cfg.format) {
    case Format::kJson: {
      ordered_json j;
      j["config"] = json_config(config);
      j["fad_inf"] = est.fad_inf;
      j["slope"] = est.slope;
      j["r_squared"] = est.r_squared;
      j["unstable"] = est.unstable;
      j["points"] = ordered_json::array();
      for (const auto& p : est.points)
        j["points"].push_back({{"size", p.size}, {"mean_fad", p.mean_fad}});
      content = j.dump(2) + "\n";
      break;
    }
    case Format::kCsv: {
      std::vector<std::vector<std::string>> rows = {
          {"metric", "value"},
          {"fad_inf", csv::format_roundtrip(est.fad_inf)},
          {"slope", csv::format_roundtrip(est.slope)},
          {"r_squared", csv::format_roundtrip(est.r_squared)},
          {"unstable", est.unstable ? "true" : "false"}};
      for (const auto& p : est.points)
        rows.push_back({"mean_fad@" + std::to_string(p.size), csv::format_roundtrip(p.mean_fad)});
      content = csv_rows(rows);
      break;
    }
    case Format::kText:
      content = text_header("score", config) +
                fmt::format("fad_inf: {}\nslope: {}\nr_squared: {}\n", fmt6(est.fad_inf),
                            fmt6(est.slope), fmt6(est.r_squared));
      if (est.unstable) content += "warning: extrapolation unstable\n";
      content += "size,mean_fad\n";
      for (const auto& p : est.points) content += fmt::format("{},{}\n", p.size, fmt6(p.mean_fad));
      break;
  }
  emit(cfg.out, out, content);
}

// --- songs ------------------------------------------------------------------

void cmd_songs(const RunConfig& cfg, std::ostream& out) {
  const Reference ref = load_reference(cfg);
  const auto songs = read_set(cfg.test_dir);
  const SongScoreTable table = per_song_scores(ref.fit, songs, ref.id);
  const Extremes ext = select_extremes(table, cfg.fraction);
  const OutlierReport report = outlier_report(table, cfg.top_k);

  std::ostringstream table_csv;
  write_song_table_csv(table_csv, table);
  if (!cfg.out.empty()) emit(cfg.out, out, table_csv.str());

  std::vector<std::pair<std::string, std::string>> config = {
      {"reference", ref.id},
      {"test", cfg.test_dir},
      {"fraction", fmt6(cfg.fraction)},
      {"top_k", std::to_string(cfg.top_k)}};

  std::string content;
  switch (cfg.format) {
    case Format::kJson: {
      ordered_json j;
      j["config"] = json_config(config);
      j["scored"] = table.rows.size();
      j["clamped"] = table.clamped_count();
      j["skipped"] = ordered_json::array();
      for (const auto& s : table.skipped) j["skipped"].push_back(s.song_id);
      j["extremes"] = {{"k", ext.k}, {"top", ext.top}, {"bottom", ext.bottom}};
      j["outliers"] = ordered_json::parse(report.to_json());
      content = j.dump(2) + "\n";
      break;
    }
    case Format::kCsv:
      content = cfg.out.empty() ? table_csv.str() : "";
      break;
    case Format::kText: {
      content = text_header("songs", config) +
                fmt::format("scored: {}\nskipped: {}\nclamped: {}\nextremes per side: {}\n",
                            table.rows.size(), table.skipped.size(), table.clamped_count(),
                            ext.k) +
                report.to_text();
      break;
    }
  }
  if (!cfg.report.empty()) {
    emit(cfg.report, out, report.to_json() + "\n");
  }
  out << content;
}

// --- eval -------------------------------------------------------------------

ordered_json prf_json(const PrfResult& r) {
  ordered_json j;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["tn"] = r.tn;
  j["support"] = r.support;
  j["flags"] = ordered_json::array();
  if (r.flags & kPrecisionUndefined) j["flags"].push_back("precision-undefined");
  if (r.flags & kRecallUndefined) j["flags"].push_back("recall-undefined");
  return j;
}

void cmd_eval_labels(const RunConfig& cfg, std::ostream& out) {
  auto scores_in = open_input(cfg.scores);
  const SongScoreTable table = read_song_table_csv(scores_in, cfg.scores);
  auto labels_in = open_input(cfg.labels);
  const auto labels = read_labels_csv(labels_in, cfg.labels);
  const BinaryLabels truth = binarize_labels(labels);
  const BinaryLabels pred = predict_labels(table, cfg.fraction);
  const PrfResult aq = prf(pred.aq_low, truth.aq_low);
  const PrfResult mq = prf(pred.mq_high, truth.mq_high);

  std::vector<std::pair<std::string, std::string>> config = {
      {"scores", cfg.scores}, {"labels", cfg.labels}, {"fraction", fmt6(cfg.fraction)},
      {"k", std::to_string(extreme_count(table.rows.size(), cfg.fraction))}};
  std::string content;
  switch (cfg.format) {
    case Format::kJson: {
      ordered_json j;
      j["config"] = json_config(config);
      j["aq_low"] = prf_json(aq);
      j["mq_high"] = prf_json(mq);
      content = j.dump(2) + "\n";
      break;
    }
    case Format::kCsv: {
      std::vector<std::vector<std::string>> rows = {
          {"target", "precision", "recall", "f1", "tp", "fp", "fn", "tn"}};
      for (const auto& [name, r] : {std::pair{"aq_low", aq}, std::pair{"mq_high", mq}})
        rows.push_back({name, csv::format_roundtrip(r.precision),
                        csv::format_roundtrip(r.recall), csv::format_roundtrip(r.f1),
                        std::to_string(r.tp), std::to_string(r.fp), std::to_string(r.fn),
                        std::to_string(r.tn)});
      content = csv_rows(rows);
      break;
    }
    case Format::kText: {
      content = text_header("eval labels", config);
      for (const auto& [name, r] : {std::pair{"aq low", aq}, std::pair{"mq high", mq}})
        content += fmt::format("{}: precision {} recall {} f1 {} (tp {} fp {} fn {})\n", name,
                               fmt6(r.precision), fmt6(r.recall), fmt6(r.f1), r.tp, r.fp, r.fn);
      break;
    }
  }
  emit(cfg.out, out, content);
}

void cmd_eval_mos(const RunConfig& cfg, std::ostream& out) {
  auto scores_in = open_input(cfg.scores);
  const SongScoreTable table = read_song_table_csv(scores_in, cfg.scores);
  auto mos_in = open_input(cfg.mos);
  const auto mos = read_mos_csv(mos_in, cfg.mos);
  const auto aq = pearson_by_testset(table, mos, MosTarget::kAq);
  const auto mq = pearson_by_testset(table, mos, MosTarget::kMq);

  std::vector<std::pair<std::string, std::string>> config = {{"scores", cfg.scores},
                                                             {"mos", cfg.mos}};
  auto pcc_text = [](const PccResult& r) {
    return r.pcc ? csv::format_roundtrip(*r.pcc) : std::string("undefined");
  };
  std::string content;
  switch (cfg.format) {
    case Format::kJson: {
      ordered_json j;
      j["config"] = json_config(config);
      for (const auto& [name, results] : {std::pair{"aq_pcc", &aq}, std::pair{"mq_pcc", &mq}}) {
        ordered_json group = ordered_json::object();
        for (const auto& [testset, r] : *results)
          group[testset] = r.pcc ? ordered_json(*r.pcc) : ordered_json("undefined");
        j[name] = group;
      }
      content = j.dump(2) + "\n";
      break;
    }
    case Format::kCsv: {
      std::vector<std::vector<std::string>> rows = {{"target", "testset", "n", "pcc"}};
      for (const auto& [name, results] : {std::pair{"aq", &aq}, std::pair{"mq", &mq}})
        for (const auto& [testset, r] : *results)
          rows.push_back({name, testset, std::to_string(r.n), pcc_text(r)});
      content = csv_rows(rows);
      break;
    }
    case Format::kText: {
      content = text_header("eval mos", config);
      for (const auto& [name, results] : {std::pair{"aq", &aq}, std::pair{"mq", &mq}})
        for (const auto& [testset, r] : *results)
          content += fmt::format("{} pcc [{}] (n={}): {}\n", name, testset, r.n,
                                 r.pcc ? fmt6(*r.pcc) : "undefined");
      break;
    }
  }
  emit(cfg.out, out, content);
}

void cmd_eval_sensitivity(const RunConfig& cfg, std::ostream& out) {
  auto in = open_input(cfg.scores);
  csv::Reader reader(in, cfg.scores);
  reader.expect_header({"effect", "fad"});
  std::optional<FadScore> clean;
  std::map<std::string, FadScore> effected;
  while (auto rec = reader.next()) {
    const std::string where = cfg.scores + ":" + std::to_string(reader.line());
    if (rec->size() != 2) throw Error(where + ": expected 2 fields");
    FadScore s;
    s.value = csv::parse_double((*rec)[1], where + " fad");
    if (!(s.value >= 0)) throw Error(where + ": fad must be >= 0");
    if ((*rec)[0] == "clean") {
      if (clean) throw Error(where + ": duplicate clean row");
      clean = s;
    } else if (!effected.emplace((*rec)[0], s).second) {
      throw Error(where + ": duplicate effect '" + (*rec)[0] + "'");
    }
  }
  if (!clean) throw Error(cfg.scores + ": missing 'clean' row");
  const SensitivityReport report = sensitivity_normalize(*clean, effected);

  std::vector<std::pair<std::string, std::string>> config = {
      {"scores", cfg.scores}, {"normalized", report.normalized ? "true" : "false"}};
  std::string content;
  switch (cfg.format) {
    case Format::kJson: {
      ordered_json j;
      j["config"] = json_config(config);
      j["clean"] = report.clean;
      j["normalized"] = report.normalized;
      j["values"] = ordered_json::object();
      for (const auto& [e, v] : report.values) j["values"][e] = v;
      content = j.dump(2) + "\n";
      break;
    }
    case Format::kCsv: {
      std::vector<std::vector<std::string>> rows = {
          {"effect", report.normalized ? "relative_fad" : "fad"}};
      for (const auto& [e, v] : report.values) rows.push_back({e, csv::format_roundtrip(v)});
      content = csv_rows(rows);
      break;
    }
    case Format::kText:
      content = text_header("eval sensitivity", config);
      for (const auto& [e, v] : report.values) content += fmt::format("{}: {}\n", e, fmt6(v));
      break;
  }
  emit(cfg.out, out, content);
}

// --- synth ------------------------------------------------------------------

void cmd_synth(const RunConfig& cfg, std::ostream& out) {
  auto in = open_input(cfg.spec);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const ordered_json::exception& e) {
    throw Error(cfg.spec + ": malformed JSON: " + e.what());
  }

  SyntheticSpec spec;
  std::size_t n_songs = 1;
  std::string prefix = "song";
  EmbeddingModelInfo model;
  try {
    spec.dim = j.at("dim").get<int>();
    if (spec.dim < 1) throw Error("dim must be >= 1");
    spec.n_frames = j.at("n_frames").get<std::size_t>();
    spec.seed = j.value("seed", kDefaultSeed);
    spec.mean = Eigen::VectorXd::Zero(spec.dim);
    if (j.contains("mean")) {
      const auto m = j.at("mean").get<std::vector<double>>();
      spec.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    }
    spec.covariance = Eigen::MatrixXd::Identity(spec.dim, spec.dim);
    if (j.contains("covariance")) {
      const auto rows = j.at("covariance").get<std::vector<std::vector<double>>>();
      spec.covariance.resize(static_cast<Eigen::Index>(rows.size()),
                             rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw Error("covariance rows differ in length");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          spec.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
    n_songs = j.value("songs", std::size_t{1});
    prefix = j.value("song_prefix", std::string("song"));
    model = synthetic_model(spec.dim);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      if (m.is_string()) {
        auto found = find_embedding_model(m.get<std::string>());
        if (!found) throw Error("unknown model '" + m.get<std::string>() + "'");
        model = *found;
      } else {
        model.name = m.at("name").get<std::string>();
        model.input_channels = m.value("input_channels", 1);
        model.sample_rate_hz = m.value("sample_rate_hz", 16000);
        model.dim = m.value("dim", spec.dim);
        if (m.contains("context_sec") && m.at("context_sec").is_string())
          model.context_sec.reset();
        else
          model.context_sec = m.value("context_sec", 1.0);
        model.hop_sec = m.value("hop_sec", 1.0);
      }
      if (model.dim != spec.dim) throw Error("model dim does not match spec dim");
    }
  } catch (const ordered_json::exception& e) {
    throw Error(cfg.spec + ": " + e.what());
  } catch (const Error& e) {
    throw Error(cfg.spec + ": " + e.what());
  }
  if (n_songs < 1) throw Error(cfg.spec + ": songs must be >= 1");

  const std::size_t width = std::to_string(n_songs - 1).size();
  std::vector<EmbeddingFrameSet> songs;
  songs.reserve(n_songs);
  for (std::size_t i = 0; i < n_songs; ++i) {
    SyntheticSpec s = spec;
    s.seed = spec.seed + i;
    songs.push_back(generate_synthetic(s, model, fmt::format("{}{:0{}}", prefix, i, width)));
  }
  write_set(cfg.test_dir, model, songs);

  switch (cfg.format) {
    case Format::kJson: {
      ordered_json r;
      r["out"] = cfg.test_dir;
      r["songs"] = n_songs;
      r["frames_per_song"] = spec.n_frames;
      r["dim"] = spec.dim;
      r["seed"] = spec.seed;
      out << r.dump(2) << "\n";
      break;
    }
    case Format::kCsv:
      out << csv_rows({{"metric", "value"},
                       {"songs", std::to_string(n_songs)},
                       {"frames_per_song", std::to_string(spec.n_frames)},
                       {"dim", std::to_string(spec.dim)},
                       {"seed", std::to_string(spec.seed)}});
      break;
    case Format::kText:
      out << fmt::format("wrote {} song(s) x {} frames (dim {}, seed {}) to {}\n", n_songs,
                         spec.n_frames, spec.dim, spec.seed, cfg.test_dir);
      break;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"fadkit: Frechet Audio Distance toolkit over embedding frame sets"};
  app.name("fadkit");
  app.require_subcommand(1);

  const std::map<std::string, Format> formats = {
      {"text", Format::kText}, {"json", Format::kJson}, {"csv", Format::kCsv}};
  auto add_format = [&](CLI::App* cmd) {
    cmd->add_option("--format", cfg.format, "Output format (text, json, csv)")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
  };
  auto add_reference = [&](CLI::App* cmd) {
    cmd->add_option("--ref", cfg.ref, "Reference stats cache or set directory")->required();
    cmd->add_option("--ref-set", cfg.ref_set, "Set directory the stats cache was built from");
    cmd->add_flag("--no-verify", cfg.no_verify, "Skip the stats cache source check");
  };

  auto* stats = app.add_subcommand("stats", "Fit a reference set and write a stats cache");
  stats->add_option("set_dir", cfg.test_dir, "Reference set directory")->required();
  stats->add_option("-o,--out", cfg.out, "Stats cache output path")->required();
  add_format(stats);

  auto* score = app.add_subcommand("score", "FAD (or FAD-infinity) of a test set");
  add_reference(score);
  score->add_option("test_dir", cfg.test_dir, "Test set directory")->required();
  auto* inf = score->add_flag("--inf", cfg.inf, "Extrapolate to infinite sample size");
  score->add_option("--sizes", cfg.sizes, "Bootstrap sample sizes, comma separated")
      ->delimiter(',')
      ->needs(inf);
  score->add_option("--repeats", cfg.repeats, "Bootstrap repeats per size")->needs(inf);
  score->add_option("--seed", cfg.seed, "Bootstrap seed")->needs(inf);
  score->add_option("--unit", cfg.unit, "Bootstrap unit")
      ->check(CLI::IsMember({"frame", "song"}))
      ->needs(inf);
  score->add_option("-o,--out", cfg.out, "Report output path");
  add_format(score);

  auto* songs = app.add_subcommand("songs", "Per-song FAD table and outlier report");
  add_reference(songs);
  songs->add_option("test_dir", cfg.test_dir, "Test set directory")->required();
  songs->add_option("--fraction", cfg.fraction, "Extreme fraction per side");
  songs->add_option("--top-k", cfg.top_k, "Outliers listed per side");
  songs->add_option("-o,--out", cfg.out, "Score table CSV output path");
  songs->add_option("--report", cfg.report, "Outlier report JSON output path");
  add_format(songs);

  auto* eval = app.add_subcommand("eval", "Evaluate per-song scores against labels or MOS");
  eval->require_subcommand(1);
  auto* labels = eval->add_subcommand("labels", "Precision/recall/F1 of extreme predictions");
  labels->add_option("--scores", cfg.scores, "Score table CSV")->required();
  labels->add_option("--labels", cfg.labels, "Labels CSV (song_id,aq,mq)")->required();
  labels->add_option("--fraction", cfg.fraction, "Extreme fraction per side");
  labels->add_option("-o,--out", cfg.out, "Report output path");
  add_format(labels);
  auto* mos = eval->add_subcommand("mos", "Per-testset Pearson correlation with MOS");
  mos->add_option("--scores", cfg.scores, "Score table CSV")->required();
  mos->add_option("--mos", cfg.mos, "MOS CSV (song_id,testset,aq_mos,mq_mos)")->required();
  mos->add_option("-o,--out", cfg.out, "Report output path");
  add_format(mos);
  auto* sens = eval->add_subcommand("sensitivity", "Effect scores relative to the clean score");
  sens->add_option("--scores", cfg.scores, "CSV (effect,fad) including a 'clean' row")
      ->required();
  sens->add_option("-o,--out", cfg.out, "Report output path");
  add_format(sens);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic multinormal set");
  synth->add_option("spec", cfg.spec, "Synthetic spec JSON")->required();
  synth->add_option("out_dir", cfg.test_dir, "Output set directory")->required();
  add_format(synth);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << kErrorPrefix << e.what() << "\n";
    return 2;
  }

  try {
    if (stats->parsed()) cfg.command = "stats";
    else if (score->parsed()) cfg.command = "score";
    else if (songs->parsed()) cfg.command = "songs";
    else if (synth->parsed()) cfg.command = "synth";
    else if (eval->parsed()) {
      cfg.command = "eval";
      cfg.eval_mode = labels->parsed() ? "labels" : mos->parsed() ? "mos" : "sensitivity";
    }
    validate(cfg);

    if (cfg.command == "stats") cmd_stats(cfg, out);
    else if (cfg.command == "score") cmd_score(cfg, out);
    else if (cfg.command == "songs") cmd_songs(cfg, out);
    else if (cfg.command == "synth") cmd_synth(cfg, out);
    else if (cfg.eval_mode == "labels") cmd_eval_labels(cfg, out);
    else if (cfg.eval_mode == "mos") cmd_eval_mos(cfg, out);
    else cmd_eval_sensitivity(cfg, out);
  } catch (const std::exception& e) {
    err << kErrorPrefix << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace fadkit
