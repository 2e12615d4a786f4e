#pragma once

#include <stdexcept>
#include <string>

namespace naap {

/// Base class for recoverable errors raised anywhere in the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (scheme documents, CSV cells, trace files).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally valid input that breaks a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures (missing file, unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace naap
