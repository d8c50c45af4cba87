#pragma once

#include <stdexcept>
#include <string>

namespace dqf {

/// Base class for data and validation failures raised by the library.
/// Programming errors (bad arguments) use std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class UnsupportedOperation : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Raised when the two observations defining an axis coincide.
class DegeneratePairError : public Error {
public:
    using Error::Error;
};

/// AUC requested for labels that contain a single class.
class UndefinedAucError : public Error {
public:
    using Error::Error;
};

}  // namespace dqf
