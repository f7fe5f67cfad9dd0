#pragma once

#include <stdexcept>
#include <string>

namespace amic {

// Raised for bad input data or violated preconditions. The CLI maps it to
// exit status 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace amic
