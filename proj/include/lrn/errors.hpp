#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lrn {

/// Input data violates a documented precondition (non-finite values, size mismatch).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A tunable is out of range (k too large, negative radius, ...).
class InvalidConfig : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class EmptyNeighborhood : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateTensor : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a stack of normals shrinks below two rows while reshaping.
class TooFewNormals : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Internal invariant broken, e.g. mismatched matrix dimensions.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The position update increased the energy; the descent step is guaranteed
/// not to, so this always indicates a bug.
class ConvergenceViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

}  // namespace lrn
