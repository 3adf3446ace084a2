#pragma once

#include <stdexcept>
#include <string>

namespace aitrand {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied an out-of-range argument (seed 0, m = 0, p outside (0,1), ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Bit length inconsistent with the supplied storage.
class LengthError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A BitCursor ran out of bits. Kept separate so callers can map it to
// "sample too short" without catching unrelated failures.
class ExhaustionError : public Error {
 public:
  using Error::Error;
};

// The input is too short for a test to be meaningful.
class InputTooShortError : public Error {
 public:
  using Error::Error;
};

// The bit source cannot make progress (for instance, every witness draw rejected).
class DegenerateSourceError : public Error {
 public:
  using Error::Error;
};

// A sample has zero variance where the statistic needs spread.
class DegenerateSampleError : public Error {
 public:
  using Error::Error;
};

// A data file parsed but failed validation.
class DataIntegrityError : public Error {
 public:
  using Error::Error;
};

// Request exceeds the configured memory budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Invalid battery configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace aitrand
