#include "fadkit/set_directory.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>
#include <openssl/evp.h>

#include "fadkit/error.hpp"
#include "fadkit/parallel.hpp"
#include "file_util.hpp"

namespace fadkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json model_to_json(const EmbeddingModelInfo& m) {
  json j;
  j["name"] = m.name;
  j["input_channels"] = m.input_channels;
  j["sample_rate_hz"] = m.sample_rate_hz;
  j["dim"] = m.dim;
  if (m.context_sec)
    j["context_sec"] = *m.context_sec;
  else
    j["context_sec"] = "unbounded";
  j["hop_sec"] = m.hop_sec;
  return j;
}

EmbeddingModelInfo model_from_json(const json& j) {
  EmbeddingModelInfo m;
  m.name = j.at("name").get<std::string>();
  m.input_channels = j.at("input_channels").get<int>();
  m.sample_rate_hz = j.at("sample_rate_hz").get<int>();
  m.dim = j.at("dim").get<int>();
  const json& ctx = j.at("context_sec");
  if (ctx.is_string()) {
    if (ctx.get<std::string>() != "unbounded")
      throw Error("context_sec must be a number or \"unbounded\"");
    m.context_sec.reset();
  } else {
    m.context_sec = ctx.get<double>();
  }
  m.hop_sec = j.at("hop_sec").get<double>();
  m.validate();
  return m;
}

void check_song_id(const std::string& id) {
  if (id.empty() || id == "." || id == ".." ||
      id.find_first_of(std::string("/\\\0", 3)) != std::string::npos)
    throw Error("invalid song id '" + id + "'");
}

}  // namespace

SetManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestName;
  if (!fs::exists(path)) {
    if (!fs::is_directory(dir)) throw Error(dir.string() + ": not a directory");
    throw Error("no songs in " + dir.string() + " (missing " + kManifestName + ")");
  }
  SetManifest manifest;
  try {
    const json j = json::parse(detail::read_file_bytes(path));
    manifest.model = model_from_json(j.at("model"));
    for (const auto& s : j.at("songs"))
      manifest.songs.push_back({s.at("id").get<std::string>(), s.at("file").get<std::string>()});
  } catch (const json::exception& e) {
    throw Error(path.string() + ": malformed manifest: " + e.what());
  }
  std::set<std::string> seen;
  for (const auto& s : manifest.songs) {
    check_song_id(s.id);
    if (s.file.empty() || fs::path(s.file).is_absolute() ||
        s.file.find("..") != std::string::npos)
      throw Error(path.string() + ": invalid file entry for song '" + s.id + "'");
    if (!seen.insert(s.id).second)
      throw Error(path.string() + ": duplicate song id '" + s.id + "'");
  }
  return manifest;
}

void write_manifest(const fs::path& dir, const SetManifest& manifest) {
  json j;
  j["model"] = model_to_json(manifest.model);
  j["songs"] = json::array();
  for (const auto& s : manifest.songs) j["songs"].push_back({{"id", s.id}, {"file", s.file}});
  detail::write_file_text(dir / kManifestName, j.dump(2) + "\n");
}

void write_set(const fs::path& dir, const EmbeddingModelInfo& model,
               std::span<const EmbeddingFrameSet> songs) {
  model.validate();
  fs::create_directories(dir);
  SetManifest manifest{model, {}};
  std::set<std::string> seen;
  for (const auto& song : songs) {
    check_song_id(song.song_id);
    if (!seen.insert(song.song_id).second)
      throw Error("duplicate song id '" + song.song_id + "'");
    if (!(song.model == model))
      throw Error("song '" + song.song_id + "' has different model metadata than the set");
    const std::string file = song.song_id + ".fade";
    write_frameset(song, dir / file);
    manifest.songs.push_back({song.song_id, file});
  }
  std::sort(manifest.songs.begin(), manifest.songs.end(),
            [](const SongEntry& a, const SongEntry& b) { return a.id < b.id; });
  write_manifest(dir, manifest);
}

std::vector<EmbeddingFrameSet> read_set(const fs::path& dir, int threads) {
  SetManifest manifest = read_manifest(dir);
  if (manifest.songs.empty()) throw Error("no songs in " + dir.string());
  std::sort(manifest.songs.begin(), manifest.songs.end(),
            [](const SongEntry& a, const SongEntry& b) { return a.id < b.id; });

  std::vector<EmbeddingFrameSet> out(manifest.songs.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto& entry = manifest.songs[i];
    out[i] = read_frameset(dir / entry.file, manifest.model, entry.id);
  });
  return out;
}

ContentHash hash_set_directory(const fs::path& dir) {
  SetManifest manifest = read_manifest(dir);
  std::sort(manifest.songs.begin(), manifest.songs.end(),
            [](const SongEntry& a, const SongEntry& b) { return a.id < b.id; });

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error("sha256 init failed");
  auto update = [&](std::string_view bytes) {
    if (EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1)
      throw Error("sha256 update failed");
  };
  auto update_field = [&](std::string_view bytes) {
    const std::string len = std::to_string(bytes.size()) + ":";
    update(len);
    update(bytes);
  };

  update_field(detail::read_file_bytes(dir / kManifestName));
  for (const auto& s : manifest.songs) {
    const std::string bytes = detail::read_file_bytes(dir / s.file);
    update_field(s.id);
    update_field(s.file);
    update_field(bytes);
  }

  ContentHash hash{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), hash.data(), &len) != 1 || len != hash.size())
    throw Error("sha256 final failed");
  return hash;
}

std::string to_hex(const ContentHash& hash) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : hash) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

}  // namespace fadkit
