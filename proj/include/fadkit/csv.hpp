#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fadkit::csv {

/// Minimal RFC 4180 reader: comma separated, double-quoted fields may hold
/// commas, quotes ("") and newlines. Blank lines are skipped.
class Reader {
 public:
  Reader(std::istream& in, std::string source);

  /// Reads the header row and checks it equals `expected` exactly.
  void expect_header(const std::vector<std::string>& expected);

  /// Next record, or nullopt at end of input.
  std::optional<std::vector<std::string>> next();

  /// 1-based line number where the last returned record started.
  std::size_t line() const { return record_line_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

void write_row(std::ostream& out, const std::vector<std::string>& fields);
std::string escape(std::string_view field);

/// Shortest decimal that parses back to the same binary64.
std::string format_roundtrip(double v);
double parse_double(std::string_view text, const std::string& context);
unsigned long long parse_uint(std::string_view text, const std::string& context);

}  // namespace fadkit::csv
