#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mimic {

/// A law charges a path (or prefix) that the reference law misses.
class DominationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Reference law required to be Markov is not.
class NonMarkovReferenceError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Marginal constraints cannot be met by any law dominated by the reference.
class InfeasibleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Input text could not be parsed; carries the 1-based line number (0 when
/// the problem is not tied to a line, e.g. a missing section).
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error(line == 0 ? message
                                       : "line " + std::to_string(line) + ": " + message),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace mimic
