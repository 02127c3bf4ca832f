#pragma once

#include <stdexcept>
#include <string>

namespace fadkit {

/// Raised for every contract violation, malformed input, or numerical
/// breakdown. The message is stable and meant to be shown to users.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fadkit
