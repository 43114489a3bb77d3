#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace znib {

// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Parameters outside their declared invariants.
class ValidationError : public Error {
  public:
    using Error::Error;
};

// Argument outside the support of a function (k > N, j = 0, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

// Input for which the requested quantity is undefined (zero total mass, ...).
class DegenerateInputError : public Error {
  public:
    using Error::Error;
};

// Linear system could not be repaired by ridge escalation.
class ConditioningError : public Error {
  public:
    using Error::Error;
};

// Every step-halving produced a non-finite objective.
class LineSearchError : public Error {
  public:
    using Error::Error;
};

// Objective was not finite at a finite-difference probe of one coordinate.
class PerturbationError : public Error {
  public:
    PerturbationError(const std::string& what, int coordinate) : Error(what), coordinate_(coordinate) {}

    int coordinate() const noexcept { return coordinate_; }

  private:
    int coordinate_;
};

// Input data is malformed or violates constraints; carries the offending row
// (1-based data row, 0 when not row specific).
class DataError : public Error {
  public:
    DataError(const std::string& what, std::size_t row = 0)
        : Error(row ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

  private:
    std::size_t row_;
};

}  // namespace znib
