#pragma once

#include <functional>
#include <string>

namespace fadkit {

using WarningHandler = std::function<void(const std::string&)>;

/// Replaces the warning sink (default: "fadkit-warning: <msg>" on stderr).
/// Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace fadkit
