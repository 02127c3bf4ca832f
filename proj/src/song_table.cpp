#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "fadkit/csv.hpp"
#include "fadkit/error.hpp"
#include "fadkit/fad_estimators.hpp"

namespace fadkit {

using nlohmann::json;

namespace {

const std::vector<std::string> kTableHeader = {"song_id", "fad", "n_frames", "rank", "flags"};

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) out += (out.empty() ? "" : "|") + f;
  return out;
}

std::vector<std::string> split_flags(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, '|'))
    if (!item.empty()) out.push_back(item);
  return out;
}

json row_to_json(const SongScore& r) {
  return {{"song_id", r.song_id}, {"fad", r.fad},     {"n_frames", r.n_frames},
          {"rank", r.rank},       {"flags", r.flags}};
}

SongScore row_from_json(const json& j) {
  return {j.at("song_id").get<std::string>(), j.at("fad").get<double>(),
          j.at("n_frames").get<std::uint64_t>(), j.at("rank").get<std::size_t>(),
          j.at("flags").get<std::vector<std::string>>()};
}

}  // namespace

void write_song_table_csv(std::ostream& out, const SongScoreTable& table) {
  csv::write_row(out, kTableHeader);
  for (const auto& r : table.rows)
    csv::write_row(out, {r.song_id, csv::format_roundtrip(r.fad), std::to_string(r.n_frames),
                         std::to_string(r.rank), join_flags(r.flags)});
  for (const auto& s : table.skipped)
    csv::write_row(out, {s.song_id, "", std::to_string(s.n_frames), "", kSkippedFlag});
}

SongScoreTable read_song_table_csv(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source);
  reader.expect_header(kTableHeader);
  SongScoreTable table;
  std::set<std::string> ids;
  while (auto rec = reader.next()) {
    const std::string where = source + ":" + std::to_string(reader.line());
    if (rec->size() != kTableHeader.size())
      throw Error(where + ": expected 5 fields, got " + std::to_string(rec->size()));
    const auto& f = *rec;
    if (f[0].empty()) throw Error(where + ": empty song_id");
    if (!ids.insert(f[0]).second) throw Error(where + ": duplicate song id '" + f[0] + "'");
    const auto n_frames = csv::parse_uint(f[2], where + " n_frames");
    if (f[1].empty()) {
      if (f[4] != kSkippedFlag) throw Error(where + ": missing fad for unskipped song");
      table.skipped.push_back({f[0], n_frames});
      continue;
    }
    table.rows.push_back({f[0], csv::parse_double(f[1], where + " fad"), n_frames,
                          static_cast<std::size_t>(csv::parse_uint(f[3], where + " rank")),
                          split_flags(f[4])});
  }
  // Ranks in the file must agree with the ordering contract.
  SongScoreTable ranked = table;
  ranked.assign_ranks();
  for (const auto& r : ranked.rows) {
    auto it = std::find_if(table.rows.begin(), table.rows.end(),
                           [&](const SongScore& s) { return s.song_id == r.song_id; });
    if (it->rank != r.rank)
      throw Error(source + ": rank of '" + r.song_id + "' is " + std::to_string(it->rank) +
                  ", expected " + std::to_string(r.rank));
  }
  ranked.reference_id = source;
  return ranked;
}

std::string OutlierReport::to_json() const {
  json j;
  j["reference_id"] = reference_id;
  j["k"] = k;
  j["table_size"] = table_size;
  j["highest"] = json::array();
  j["lowest"] = json::array();
  for (const auto& r : highest) j["highest"].push_back(row_to_json(r));
  for (const auto& r : lowest) j["lowest"].push_back(row_to_json(r));
  return j.dump(2);
}

OutlierReport OutlierReport::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    OutlierReport r;
    r.reference_id = j.at("reference_id").get<std::string>();
    r.k = j.at("k").get<std::size_t>();
    r.table_size = j.at("table_size").get<std::size_t>();
    for (const auto& row : j.at("highest")) r.highest.push_back(row_from_json(row));
    for (const auto& row : j.at("lowest")) r.lowest.push_back(row_from_json(row));
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed outlier report: ") + e.what());
  }
}

std::string OutlierReport::to_text() const {
  std::string out = fmt::format("Outliers vs {} ({} scored songs, k = {})\n",
                                reference_id.empty() ? "reference" : reference_id,
                                table_size, k);
  auto section = [&](const char* title, const std::vector<SongScore>& rows) {
    out += fmt::format("{}:\n", title);
    for (const auto& r : rows) {
      out += fmt::format("  {:>6}  {:<24} fad={:.6g}  frames={}", r.rank, r.song_id, r.fad,
                         r.n_frames);
      if (!r.flags.empty()) out += "  [" + join_flags(r.flags) + "]";
      out += '\n';
    }
  };
  section("highest", highest);
  section("lowest", lowest);
  return out;
}

}  // namespace fadkit
