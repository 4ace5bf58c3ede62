#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace znav {

/// Invalid construction parameter (spectrum spec, geometry, config value).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed persisted file. Carries the byte offset at which parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Persisted file carries a version this build does not read.
class VersionError : public std::runtime_error {
 public:
  explicit VersionError(const std::string& found)
      : std::runtime_error("unsupported file version '" + found + "'"), found_(found) {}

  const std::string& found() const noexcept { return found_; }

 private:
  std::string found_;
};

/// A caller broke an interface contract (e.g. a controller returned an unknown action id).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace znav
