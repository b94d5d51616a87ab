#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csdlab {

// Base of every error the library throws. Callers that only care about
// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite entries or otherwise malformed numeric input.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Out-of-range index, rank, or mismatched shapes.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A decomposition cannot be normalized because the all-ones vector is not
// in the row space of the reconstruction.
class DegenerateDecomposition : public Error {
public:
    using Error::Error;
};

// Ground-truth instance does not have the rank structure the
// identifiability check requires.
class RankDeficientInstance : public Error {
public:
    using Error::Error;
};

// Non-finite activations or parameters during training.
class NumericOverflow : public Error {
public:
    using Error::Error;
};

// Method-of-moments Beta fit is undefined for the given samples.
class DegenerateFit : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t offset)
        : Error(what), line_(line), offset_(offset) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t line_;
    std::size_t offset_;
};

class VersionError : public Error {
public:
    VersionError(const std::string& expected, const std::string& actual)
        : Error("format version mismatch: expected \"" + expected + "\", got \"" + actual + "\""),
          expected_(expected), actual_(actual) {}

    const std::string& expected() const noexcept { return expected_; }
    const std::string& actual() const noexcept { return actual_; }

private:
    std::string expected_;
    std::string actual_;
};

// Configuration document failed validation; `field` is a dotted path.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& message)
        : Error(field + ": " + message), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace csdlab
