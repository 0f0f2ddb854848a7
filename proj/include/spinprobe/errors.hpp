// errors.hpp: exception types shared by the spinprobe modules

#pragma once

#include <stdexcept>
#include <string>

namespace spinprobe {

// Invalid input or configuration values.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Anything that goes wrong while numbers are being crunched.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IntegratorError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class PositivityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Raised by period extraction when the series carries no usable oscillation.
class NoOscillationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SeriesTooShortError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InversionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace spinprobe
