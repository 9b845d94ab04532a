#pragma once

#include <stdexcept>
#include <string>

namespace sheetguard {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed workbook, formula or policy text. `line` and `column` are 1-based;
/// 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& message, int line, int column);

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string message_;
    int line_;
    int column_;
};

/// A well-formed request that the current state cannot honour
/// (illegal mark transition, role override on the wrong kind of cell, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Marking an audit item in a way its current state forbids.
class TransitionError : public UsageError {
public:
    using UsageError::UsageError;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

}  // namespace sheetguard
