#pragma once

#include <array>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fadkit/fad_estimators.hpp"
#include "fadkit/gaussian_stats.hpp"

namespace fadkit {

enum class QualityLabel { kHigh, kMedium, kLow, kNa };

QualityLabel parse_quality_label(std::string_view text);
std::string_view to_string(QualityLabel label);

struct LabelRecord {
  std::string song_id;
  QualityLabel aq = QualityLabel::kNa;
  QualityLabel mq = QualityLabel::kNa;
};

/// One row per song per testset; MOS values are already rater averages.
struct MosRecord {
  std::string song_id;
  std::string testset;
  double aq_mos = 0;
  double mq_mos = 0;
};

/// `song_id,aq,mq` with labels in {high, medium, low, na}.
std::vector<LabelRecord> read_labels_csv(std::istream& in, const std::string& source);
/// `song_id,testset,aq_mos,mq_mos` with MOS in [1, 5].
std::vector<MosRecord> read_mos_csv(std::istream& in, const std::string& source);

using BinaryMap = std::map<std::string, bool>;

/// aq: true iff "low"; mq: true iff "high". Everything else, including na,
/// maps to false.
struct BinaryLabels {
  BinaryMap aq_low;
  BinaryMap mq_high;
};

BinaryLabels binarize_labels(std::span<const LabelRecord> records);

/// Highest-FAD extreme predicted AQ "low", lowest-FAD extreme predicted MQ
/// "high". Every song of the table (skipped ones included) gets an entry.
BinaryLabels predict_labels(const SongScoreTable& table, double fraction);

enum PrfFlag : unsigned {
  kPrecisionUndefined = 1u << 0,  // no positive predictions
  kRecallUndefined = 1u << 1,     // no positive truths
};

struct PrfResult {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t support = 0;  // positives in truth
  unsigned flags = 0;
};

/// Requires identical key sets; a missing song is an error.
PrfResult prf(const BinaryMap& predicted, const BinaryMap& truth);

enum class MosTarget { kAq, kMq };

struct PccResult {
  std::optional<double> pcc;  // nullopt: undefined (zero variance)
  std::size_t n = 0;
  std::string note;
};

/// Pearson correlation; nullopt when either input is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation between per-song FAD and MOS inside each testset.
/// Negative values mean FAD tracks quality.
std::map<std::string, PccResult> pearson_by_testset(const SongScoreTable& table,
                                                     std::span<const MosRecord> mos,
                                                     MosTarget target);

/// The five audio effects of the sensitivity test.
inline constexpr std::array<std::string_view, 5> kSensitivityEffects = {
    "distortion", "lowpass", "reverb", "pitch-down", "pitch-up"};

struct SensitivityReport {
  /// Ratio effected/clean when `normalized`; absolute scores otherwise.
  std::map<std::string, double> values;
  bool normalized = true;
  double clean = 0;
};

/// Divides every effected score by the clean score. A zero clean score
/// yields the absolute scores with normalized == false.
SensitivityReport sensitivity_normalize(const FadScore& clean,
                                        const std::map<std::string, FadScore>& effected);

}  // namespace fadkit
