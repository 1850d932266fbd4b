#pragma once

#include <stdexcept>
#include <string>

namespace fedman {

// Base of every error raised by the library. Callers that only want to
// report and exit can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The smallest eigenvalue of a Gram matrix fell below the configured floor.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

// An iterate left the region where the manifold projection is well defined.
// Carries the round and local step at which it happened (-1 when not
// applicable).
class TubeExit : public Error {
 public:
  TubeExit(const std::string& what, long round, long step)
      : Error(what + " (round " + std::to_string(round) + ", step " +
              std::to_string(step) + ")"),
        round_(round),
        step_(step) {}

  long round() const noexcept { return round_; }
  long step() const noexcept { return step_; }

 private:
  long round_;
  long step_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedman
