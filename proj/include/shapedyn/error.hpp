#ifndef SHAPEDYN_ERROR_HPP
#define SHAPEDYN_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace shapedyn {

// Every failure raised by the library carries the module and operation that
// produced it so the CLI can report where a pipeline broke.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string operation, const std::string& message)
      : std::runtime_error(module + "::" + operation + ": " + message),
        module_(std::move(module)),
        operation_(std::move(operation)),
        detail_(message) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string module_;
  std::string operation_;
  std::string detail_;
};

}  // namespace shapedyn

#endif  // SHAPEDYN_ERROR_HPP
