#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sefkit {

// Input data failed a structural or semantic check. The CLI maps this
// (and every subclass) to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public ValidationError {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : ValidationError(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace sefkit
