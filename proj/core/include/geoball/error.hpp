#pragma once

#include <stdexcept>
#include <string>

namespace geoball {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line = 0, std::size_t column = 0)
        : Error(format(message, line, column)), line_(line), column_(column)
    {
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& message, std::size_t line, std::size_t column)
    {
        if (line == 0) return message;
        std::string out = "line " + std::to_string(line);
        if (column != 0) out += ", column " + std::to_string(column);
        return out + ": " + message;
    }

    std::size_t line_;
    std::size_t column_;
};

/// The ontology violates a structural invariant (cycle, unknown identifier, ...).
class OntologyError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite value or could not proceed.
class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace geoball
