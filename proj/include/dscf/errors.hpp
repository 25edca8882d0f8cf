#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dscf {

/// Malformed input record. Carries the source path and 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string path, std::size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
          path_(std::move(path)), line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

/// A record parsed but its value is out of the allowed range.
class ValidationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Index or argument outside the domain of an operation.
class DomainError : public std::domain_error {
    using std::domain_error::domain_error;
};

class DimensionError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Operation invoked in the wrong lifecycle state (e.g. backward before forward).
class StateError : public std::logic_error {
    using std::logic_error::logic_error;
};

/// Training produced a non-finite value.
class TrainingError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dscf
