#pragma once

#include <stdexcept>
#include <string>

namespace agenttrace {

/// An input file or record violates its schema.
class format_error : public std::runtime_error {
 public:
  explicit format_error(const std::string& what) : std::runtime_error(what) {}
};

/// A score field cannot be built (trace shorter than one window).
class empty_field_error : public std::runtime_error {
 public:
  explicit empty_field_error(const std::string& what) : std::runtime_error(what) {}
};

/// A metric is undefined for the given inputs (e.g. cosine of a zero matrix).
class undefined_metric_error : public std::domain_error {
 public:
  explicit undefined_metric_error(const std::string& what) : std::domain_error(what) {}
};

/// restore() could not find any agent signal above the null calibration.
class unrestorable_error : public std::runtime_error {
 public:
  explicit unrestorable_error(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure (missing file, unwritable directory).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace agenttrace
