#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fadkit/embedding_store.hpp"

namespace fadkit {

// A set is a directory holding one frame file per song plus `set.json`:
//   {"model": {...}, "songs": [{"id": ..., "file": ...}, ...]}

inline constexpr const char* kManifestName = "set.json";

struct SongEntry {
  std::string id;
  std::string file;
  bool operator==(const SongEntry&) const = default;
};

struct SetManifest {
  EmbeddingModelInfo model;
  std::vector<SongEntry> songs;
};

SetManifest read_manifest(const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const SetManifest& manifest);

/// Writes every song as `<id>.fade` and the manifest. Song ids must be unique
/// and usable as file names.
void write_set(const std::filesystem::path& dir, const EmbeddingModelInfo& model,
               std::span<const EmbeddingFrameSet> songs);

/// Loads every song of a set, sorted by song id. Errors name the offending
/// file.
std::vector<EmbeddingFrameSet> read_set(const std::filesystem::path& dir,
                                        int threads = 0);

using ContentHash = std::array<std::uint8_t, 32>;

/// SHA-256 over the manifest bytes and, for every song in id order, the
/// song id, file name, file size and file bytes.
ContentHash hash_set_directory(const std::filesystem::path& dir);

std::string to_hex(const ContentHash& hash);

}  // namespace fadkit
