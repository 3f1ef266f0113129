#pragma once

#include <stdexcept>
#include <string>

namespace vrsim {

// Invalid or inconsistent user-supplied configuration (config file, map file,
// CLI flags). The CLI maps this to its config-error exit code.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vrsim
