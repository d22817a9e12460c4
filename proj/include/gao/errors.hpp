#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gao {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative kernel gave up; carries the last estimate it had.
class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, double last_estimate)
        : Error(what), last_estimate_(last_estimate) {}

    double last_estimate() const noexcept { return last_estimate_; }

private:
    double last_estimate_;
};

/// g(lo) and g(hi) do not straddle zero.
class BracketError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Tabular model queried outside of its ages.
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

class FittingError : public Error {
public:
    using Error::Error;
};

/// r <= (1 - gamma) * delta: the Merton value function diverges.
class IllPosedError : public Error {
public:
    using Error::Error;
};

/// Parameter regime for which a closed form is not defined (e.g. r <= 0 for H/r).
class UnsupportedRegimeError : public Error {
public:
    using Error::Error;
};

/// Target value not attainable on the search bracket.
class NoSolutionError : public Error {
public:
    using Error::Error;
};

class EstimationFailure : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; line is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace gao
