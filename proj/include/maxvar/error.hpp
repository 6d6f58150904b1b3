#pragma once

#include <stdexcept>
#include <string>

namespace maxvar {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two grid objects that must share a geometry do not.
class GeometryMismatch : public Error {
public:
    explicit GeometryMismatch(const std::string& what) : Error("geometry mismatch: " + what) {}
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(what) {}
};

/// Malformed input file or payload.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error("format error: " + what) {}
};

namespace detail {
inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw InvalidArgument(msg);
}
} // namespace detail

} // namespace maxvar
