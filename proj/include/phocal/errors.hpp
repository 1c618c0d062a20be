#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phocal {

/// Bad input: malformed files, violated preconditions, out-of-range parameters.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input is well-formed but the numerical problem it poses is degenerate
/// (rank deficiency, collinear points, failed search).
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parse failure tied to a location in a text file.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : ValidationError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace phocal
