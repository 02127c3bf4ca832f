#include "fadkit/csv.hpp"

#include <charconv>
#include <cmath>

#include "fadkit/error.hpp"

namespace fadkit::csv {

Reader::Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

std::optional<std::vector<std::string>> Reader::next() {
  std::string line;
  while (true) {
    if (!std::getline(in_, line)) return std::nullopt;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  record_line_ = line_;

  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (!quoted) break;
      // Quoted field continues on the next physical line.
      std::string more;
      if (!std::getline(in_, more))
        throw Error(source_ + ":" + std::to_string(record_line_) + ": unterminated quote");
      ++line_;
      if (!more.empty() && more.back() == '\r') more.pop_back();
      field += '\n';
      line = std::move(more);
      i = 0;
      continue;
    }
    const char c = line[i++];
    if (quoted) {
      if (c == '"') {
        if (i < line.size() && line[i] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

void Reader::expect_header(const std::vector<std::string>& expected) {
  auto header = next();
  if (!header) throw Error(source_ + ": empty file, expected a header");
  if (*header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw Error(source_ + ": bad header, expected '" + want + "'");
  }
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

std::string format_roundtrip(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, end);
}

double parse_double(std::string_view text, const std::string& context) {
  double v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty())
    throw Error(context + ": '" + std::string(text) + "' is not a number");
  return v;
}

unsigned long long parse_uint(std::string_view text, const std::string& context) {
  unsigned long long v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty())
    throw Error(context + ": '" + std::string(text) + "' is not a non-negative integer");
  return v;
}

}  // namespace fadkit::csv
