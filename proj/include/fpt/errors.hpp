#pragma once

#include <stdexcept>
#include <string>

namespace fpt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the state interval or otherwise outside an operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A value was requested as a plain double but does not fit in one.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// Density evaluated exactly at a point where it diverges.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class NonIntegrableError : public Error {
 public:
  using Error::Error;
};

/// Refinement cap reached before two successive estimates agreed.
class ToleranceError : public Error {
 public:
  using Error::Error;
};

/// Boundary behaviour for which the moment recursions do not hold.
class InvalidBoundaryError : public Error {
 public:
  using Error::Error;
};

class SeriesDivergenceError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incomplete model, threshold or run parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// Too many simulated paths hit the time cap.
class TimeCapError : public Error {
 public:
  using Error::Error;
};

}  // namespace fpt
