#pragma once

#include <stdexcept>
#include <string>

namespace metaradar {

// Invalid arguments are reported with std::invalid_argument throughout.

/// A linear-algebra step failed on input that should have been well posed
/// (e.g. a covariance that is not positive definite).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file the current stage depends on (dataset, checkpoint) is absent.
class MissingPrerequisite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed dataset / checkpoint file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metaradar
