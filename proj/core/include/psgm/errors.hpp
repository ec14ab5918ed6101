#pragma once

#include <stdexcept>
#include <string>

namespace psgm {

/// File or stream level failure. The message always names the offending path.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// Data-dependent failure (empty evaluation set, degenerate geometry, ...).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace psgm
