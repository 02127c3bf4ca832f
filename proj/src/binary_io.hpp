#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "fadkit/error.hpp"

namespace fadkit::detail {

// Little-endian encoding independent of host byte order.

class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void reserve(std::size_t n) { buf_.reserve(n); }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what)
      : data_(data), what_(std::move(what)) {}

  std::size_t remaining() const { return data_.size() - pos_; }

  void need(std::size_t n, const char* err) const {
    if (remaining() < n) throw Error(what_ + ": " + err);
  }
  std::string_view bytes(std::size_t n, const char* err) {
    need(n, err);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32(const char* err) {
    auto b = bytes(4, err);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  std::uint64_t u64(const char* err) {
    auto b = bytes(8, err);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  float f32(const char* err) { return std::bit_cast<float>(u32(err)); }
  double f64(const char* err) { return std::bit_cast<double>(u64(err)); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

}  // namespace fadkit::detail
