#pragma once

#include <functional>
#include <string_view>

namespace tagrisk::log {

using Sink = std::function<void(std::string_view)>;

/// Replaces the warning sink (stderr by default) and returns the old one.
/// An empty sink silences warnings.
Sink set_warning_sink(Sink sink);

void warn(std::string_view message);

}  // namespace tagrisk::log
