#pragma once

#include <stdexcept>
#include <string>

namespace vbcast {

/// Thrown when a caller passes a value outside the documented domain of an
/// operation (negative dimension, probability out of range, bad label set).
class argument_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when operator shapes are inconsistent with each other or when a
/// requested object would exceed the configured dimension ceiling.
class size_error : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Thrown when an iterative routine fails to converge or a computation loses
/// too much precision to return a trustworthy result.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an operation needs data the caller must supply from another
/// component and that data is absent.
class dependency_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thrown when input data fails a runtime consistency check that the
/// requested operation relies on (for example a decomposition whose
/// success probability is not input independent).
class invariant_violation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vbcast
