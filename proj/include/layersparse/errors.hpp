#pragma once

#include <stdexcept>
#include <string>

namespace layersparse {

// Every library failure derives from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible matrix/vector/network shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside its documented domain (lo >= hi, p outside [0,1], ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed input document; message carries the field or line context.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a structural invariant (e.g. p1 != 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller-side precondition of a transformation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Sound condensation refused: a layer flagged for removal cannot be
// pulled through its neighbour exactly.
class SoundnessError : public Error {
 public:
  using Error::Error;
};

// Training objective became non-finite or exceeded the divergence cap.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch, int step)
      : Error(what), epoch_(epoch), step_(step) {}
  int epoch() const noexcept { return epoch_; }
  int step() const noexcept { return step_; }

 private:
  int epoch_;
  int step_;
};

}  // namespace layersparse
