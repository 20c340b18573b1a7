#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clipdepth {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A scalar argument or configuration value is out of its allowed range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A vector too close to zero to have a direction.
class DegenerateVectorError : public Error {
public:
    using Error::Error;
};

/// Input data is missing something the operation needs.
class DataError : public Error {
public:
    using Error::Error;
};

/// A metric or loss could not be evaluated (empty pixel set, non-finite value).
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// A checkpoint cannot be restored into the requested model.
class CheckpointError : public Error {
public:
    using Error::Error;
};

/// Binary file parse failure. `offset` is the byte position where reading failed.
class ParseError : public Error {
public:
    enum class Kind { bad_magic, bad_version, truncated, invalid };

    ParseError(Kind kind, std::size_t offset, const std::string& what)
        : Error(what + " at byte offset " + std::to_string(offset)), kind_(kind), offset_(offset) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

} // namespace clipdepth
