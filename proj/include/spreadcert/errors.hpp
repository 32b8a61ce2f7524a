#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spreadcert {

/// Shape/size mismatch or an empty dimension where a positive one is required.
class InvalidDimensionError : public std::invalid_argument {
 public:
  explicit InvalidDimensionError(const std::string& msg)
      : std::invalid_argument(msg) {}
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

/// A guard on combinatorial or memory blow-up was exceeded. Carries the
/// offending count so callers can report it.
class ResourceLimitError : public std::runtime_error {
 public:
  ResourceLimitError(const std::string& msg, std::uint64_t count,
                     std::uint64_t limit)
      : std::runtime_error(msg + " (count " + std::to_string(count) +
                           " exceeds limit " + std::to_string(limit) + ")"),
        count_(count),
        limit_(limit) {}

  std::uint64_t count() const { return count_; }
  std::uint64_t limit() const { return limit_; }

 private:
  std::uint64_t count_;
  std::uint64_t limit_;
};

}  // namespace spreadcert
