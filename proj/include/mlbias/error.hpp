#pragma once

#include <stdexcept>
#include <string>

namespace mlbias {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied data that violates a documented precondition.
class InputError : public Error {
public:
    using Error::Error;
};

/// Model access failed: unreachable server, bad response, fixture miss.
class BackendError : public Error {
public:
    using Error::Error;
};

/// A target token is not part of the model vocabulary.
class UnknownTokenError : public BackendError {
public:
    explicit UnknownTokenError(std::string token)
        : BackendError("target token not in vocabulary: \"" + token + "\""), token_(std::move(token)) {}
    const std::string& token() const noexcept { return token_; }

private:
    std::string token_;
};

/// A statistic is undefined on the given data (zero variance, all ties, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside an iterative solver.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace mlbias
