#pragma once

#include <stdexcept>
#include <string>

namespace pairfair {

// Exception hierarchy. Each category maps onto a stable CLI exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

/// Unreadable or unwritable files.
class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Malformed input, violated preconditions, invalid configuration.
class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Pair mining or loading produced nothing usable.
class EmptyResultError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

/// Divergence, non-finite values, undefined ratios.
class NumericError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 5; }
};

}  // namespace pairfair
