#include "tagrisk/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace tagrisk::log {

namespace {

std::mutex mu;

Sink& sink() {
  static Sink s = [](std::string_view m) { std::cerr << "warning: " << m << '\n'; };
  return s;
}

}  // namespace

Sink set_warning_sink(Sink s) {
  std::lock_guard lock(mu);
  return std::exchange(sink(), std::move(s));
}

void warn(std::string_view message) {
  std::lock_guard lock(mu);
  if (sink()) sink()(message);
}

}  // namespace tagrisk::log
