#pragma once

#include <stdexcept>
#include <string>

namespace prnn {

// Precondition violations. The CLI maps these to exit code 1.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Everything below is a runtime failure (exit code 2).
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IntegrationDivergence : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class DegenerateSignal : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class DegenerateMatrix : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class DegenerateCalibration : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class DegenerateBias : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class DegenerateOutput : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class SamplingError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class InvalidField : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

class IoError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

} // namespace prnn
