#pragma once

#include <stdexcept>
#include <string>

namespace fracsub {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the documented domain (e.g. beta outside (0,1)).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A configuration violates a validity predicate of the schemes.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A quadrature or series evaluation failed to reach its tolerance.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A request would exceed a hard size limit.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// A sampled subordinator path never crossed the requested level.
class InsufficientPathError : public Error {
public:
    using Error::Error;
};

/// Evaluation at a point where an envelope or density is singular.
class SingularityError : public Error {
public:
    using Error::Error;
};

}  // namespace fracsub
