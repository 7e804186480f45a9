#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seg {

/// File could not be opened, read, or written.
class io_error : public std::runtime_error {
public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed file contents. Carries the byte offset of the offending data
/// when one can be pinned down.
class parse_error : public io_error {
public:
  parse_error(const std::string& file, std::size_t offset, const std::string& msg)
      : io_error(file + ": " + msg + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  parse_error(const std::string& file, const std::string& msg)
      : io_error(file + ": " + msg), offset_(0) {}

  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

/// Two grids that must share a shape do not.
class shape_mismatch : public std::invalid_argument {
public:
  explicit shape_mismatch(const std::string& msg) : std::invalid_argument(msg) {}
};

/// A numerical scheme produced NaN or Inf.
class numerical_error : public std::runtime_error {
public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad run configuration (missing key, unknown key, unparseable value).
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace seg
