#ifndef SHAPEDYN_DIAGNOSTICS_HPP
#define SHAPEDYN_DIAGNOSTICS_HPP

#include <functional>
#include <string>

namespace shapedyn {

// Non-fatal conditions (unstable fitted models, clamped noise) go through a
// replaceable sink. The default writes one line to stderr.
using WarningSink = std::function<void(const std::string& module, const std::string& message)>;

void warn(const std::string& module, const std::string& message);

// Installs `sink` and returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace shapedyn

#endif  // SHAPEDYN_DIAGNOSTICS_HPP
