#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spca {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition or configuration violation.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Malformed input file; `line` is 1-based (0 when the whole file is at fault).
class ParseError : public Error {
public:
    enum class Kind { empty_file, non_numeric, ragged_row, row_count_mismatch, bad_label, io };

    ParseError(Kind kind, std::size_t line, const std::string& what)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
          kind_(kind), line_(line) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    Kind kind_;
    std::size_t line_;
};

// Non-finite values, failed factorizations.
class NumericError : public Error {
public:
    using Error::Error;
};

// Iterate became non-finite during a solve.
class DivergenceError : public NumericError {
public:
    DivergenceError(std::size_t iteration, const std::string& what)
        : NumericError(what + " at iteration " + std::to_string(iteration)),
          iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace spca
