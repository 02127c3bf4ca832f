#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "fadkit/error.hpp"

namespace fadkit::detail {

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error("read failed: " + path.string());
  return data;
}

inline void write_file_bytes(const std::filesystem::path& path, const char* data,
                             std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(data, static_cast<std::streamsize>(n));
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<char>& data) {
  write_file_bytes(path, data.data(), data.size());
}

inline void write_file_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, text.data(), text.size());
}

}  // namespace fadkit::detail
