#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bargain {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class InfeasibleState : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The single-agent descent did not reach its tolerance within budget.
class PreferredStateNotFound : public Error {
 public:
  using Error::Error;
};

/// Some agent's gain d^i - l^i(x) is not strictly positive at the iterate.
class IndividualRationalityViolated : public Error {
 public:
  using Error::Error;
};

/// Some agent's disagreement cost does not exceed its ideal cost.
class IdealPointInfeasible : public Error {
 public:
  using Error::Error;
};

class BisectionStalled : public Error {
 public:
  using Error::Error;
};

class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

/// Raised while reading a price CSV; `line()` is 1-based.
class PriceCsvError : public Error {
 public:
  enum class Kind {
    kIo,
    kMalformedHeader,
    kMalformedDate,
    kMalformedNumber,
    kNonIncreasingDate,
    kNonPositivePrice,
    kRaggedRow,
    kTooFewRows,
  };

  PriceCsvError(Kind kind, std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what),
        kind_(kind),
        line_(line) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

}  // namespace bargain
