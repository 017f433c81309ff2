#include "shapedyn/diagnostics.hpp"

#include <iostream>
#include <mutex>

namespace shapedyn {

namespace {

std::mutex sink_mutex;

WarningSink& sink() {
  static WarningSink current = [](const std::string& module, const std::string& message) {
    std::cerr << "warning: " << module << ": " << message << '\n';
  };
  return current;
}

}  // namespace

void warn(const std::string& module, const std::string& message) {
  std::lock_guard lock(sink_mutex);
  if (sink()) sink()(module, message);
}

WarningSink set_warning_sink(WarningSink next) {
  std::lock_guard lock(sink_mutex);
  std::swap(sink(), next);
  return next;
}

}  // namespace shapedyn
