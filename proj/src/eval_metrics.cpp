#include "fadkit/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "fadkit/csv.hpp"
#include "fadkit/error.hpp"
#include "fadkit/log.hpp"

namespace fadkit {

QualityLabel parse_quality_label(std::string_view text) {
  if (text == "high") return QualityLabel::kHigh;
  if (text == "medium") return QualityLabel::kMedium;
  if (text == "low") return QualityLabel::kLow;
  if (text == "na") return QualityLabel::kNa;
  throw Error("unknown quality label '" + std::string(text) +
              "' (expected high, medium, low or na)");
}

std::string_view to_string(QualityLabel label) {
  switch (label) {
    case QualityLabel::kHigh: return "high";
    case QualityLabel::kMedium: return "medium";
    case QualityLabel::kLow: return "low";
    case QualityLabel::kNa: return "na";
  }
  return "na";
}

std::vector<LabelRecord> read_labels_csv(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source);
  reader.expect_header({"song_id", "aq", "mq"});
  std::vector<LabelRecord> out;
  while (auto rec = reader.next()) {
    const std::string where = source + ":" + std::to_string(reader.line());
    if (rec->size() != 3) throw Error(where + ": expected 3 fields");
    if ((*rec)[0].empty()) throw Error(where + ": empty song_id");
    try {
      out.push_back({(*rec)[0], parse_quality_label((*rec)[1]), parse_quality_label((*rec)[2])});
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<MosRecord> read_mos_csv(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source);
  reader.expect_header({"song_id", "testset", "aq_mos", "mq_mos"});
  std::vector<MosRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  while (auto rec = reader.next()) {
    const std::string where = source + ":" + std::to_string(reader.line());
    if (rec->size() != 4) throw Error(where + ": expected 4 fields");
    const auto& f = *rec;
    if (f[0].empty()) throw Error(where + ": empty song_id");
    if (f[1].empty()) throw Error(where + ": empty testset");
    MosRecord r{f[0], f[1], csv::parse_double(f[2], where + " aq_mos"),
                csv::parse_double(f[3], where + " mq_mos")};
    for (double v : {r.aq_mos, r.mq_mos})
      if (!(v >= 1.0 && v <= 5.0))
        throw Error(where + ": MOS " + csv::format_roundtrip(v) + " outside [1, 5]");
    if (!seen.insert({r.song_id, r.testset}).second)
      throw Error(where + ": duplicate row for song '" + r.song_id + "' in testset '" +
                  r.testset + "'");
    out.push_back(std::move(r));
  }
  return out;
}

BinaryLabels binarize_labels(std::span<const LabelRecord> records) {
  BinaryLabels out;
  for (const auto& r : records) {
    if (r.song_id.empty()) throw Error("empty song_id in labels");
    if (!out.aq_low.emplace(r.song_id, r.aq == QualityLabel::kLow).second)
      throw Error("duplicate song id '" + r.song_id + "' in labels");
    out.mq_high.emplace(r.song_id, r.mq == QualityLabel::kHigh);
  }
  return out;
}

BinaryLabels predict_labels(const SongScoreTable& table, double fraction) {
  const Extremes ext = select_extremes(table, fraction);
  BinaryLabels out;
  for (const auto& r : table.rows) {
    out.aq_low[r.song_id] = false;
    out.mq_high[r.song_id] = false;
  }
  for (const auto& s : table.skipped) {
    out.aq_low[s.song_id] = false;
    out.mq_high[s.song_id] = false;
  }
  for (const auto& id : ext.top) out.aq_low[id] = true;
  for (const auto& id : ext.bottom) out.mq_high[id] = true;
  return out;
}

PrfResult prf(const BinaryMap& predicted, const BinaryMap& truth) {
  for (const auto& [id, _] : predicted)
    if (!truth.count(id)) throw Error("song '" + id + "' has a prediction but no label");
  for (const auto& [id, _] : truth)
    if (!predicted.count(id)) throw Error("song '" + id + "' has a label but no prediction");

  PrfResult r;
  for (const auto& [id, pred] : predicted) {
    const bool actual = truth.at(id);
    if (pred && actual) ++r.tp;
    else if (pred && !actual) ++r.fp;
    else if (!pred && actual) ++r.fn;
    else ++r.tn;
  }
  r.support = r.tp + r.fn;
  if (r.tp + r.fp > 0)
    r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  else
    r.flags |= kPrecisionUndefined;
  if (r.tp + r.fn > 0)
    r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  else
    r.flags |= kRecallUndefined;
  r.f1 = r.precision + r.recall > 0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  if (x.size() < 2) throw Error("pearson: need at least 2 points");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
  };
  if (constant(x) || constant(y)) return std::nullopt;

  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::map<std::string, PccResult> pearson_by_testset(const SongScoreTable& table,
                                                     std::span<const MosRecord> mos,
                                                     MosTarget target) {
  std::unordered_map<std::string, double> fad_by_song;
  for (const auto& r : table.rows) fad_by_song.emplace(r.song_id, r.fad);
  std::set<std::string> skipped;
  for (const auto& s : table.skipped) skipped.insert(s.song_id);

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& m : mos) {
    auto it = fad_by_song.find(m.song_id);
    if (it == fad_by_song.end()) {
      if (skipped.count(m.song_id))
        throw Error("song '" + m.song_id + "' was skipped and has no FAD score");
      throw Error("song '" + m.song_id + "' from MOS file is missing from the score table");
    }
    auto& [fads, scores] = groups[m.testset];
    fads.push_back(it->second);
    scores.push_back(target == MosTarget::kAq ? m.aq_mos : m.mq_mos);
  }

  std::map<std::string, PccResult> out;
  for (const auto& [testset, data] : groups) {
    const auto& [fads, scores] = data;
    if (fads.size() < 3)
      throw Error("testset '" + testset + "' has " + std::to_string(fads.size()) +
                  " songs; need at least 3");
    PccResult r;
    r.n = fads.size();
    r.pcc = pearson(fads, scores);
    if (!r.pcc) {
      r.note = "zero variance";
      warn("PCC undefined for testset '" + testset + "': zero variance");
    }
    out.emplace(testset, std::move(r));
  }
  return out;
}

SensitivityReport sensitivity_normalize(const FadScore& clean,
                                        const std::map<std::string, FadScore>& effected) {
  SensitivityReport report;
  report.clean = clean.value;
  report.normalized = clean.value > 0;
  if (!report.normalized)
    warn("clean FAD is 0; reporting absolute scores instead of ratios");
  for (const auto& [effect, score] : effected) {
    if (effect.empty()) throw Error("empty effect name");
    report.values[effect] = report.normalized ? score.value / clean.value : score.value;
  }
  return report;
}

}  // namespace fadkit
