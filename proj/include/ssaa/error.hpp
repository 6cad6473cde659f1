#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssaa {

// Every failure raised by the library derives from Error. The C API maps each
// subclass to one status code, so keep the two lists in sync (see c_api.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input length or shape does not match what the model/operation expects.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An index (class label, component, sample) lies outside its valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Malformed weight file, IDX file or report document.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Bad distribution parameter (e.g. negative variance).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Contradictory attack or campaign configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Selection over an empty candidate index set.
class ExhaustedError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergence : public Error {
 public:
  TrainingDivergence(std::size_t epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// Expansion probe called outside its no-clipping domain.
class ProbeDomainError : public Error {
 public:
  using Error::Error;
};

// Reports passed to the curve builder disagree on fixed settings.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssaa
