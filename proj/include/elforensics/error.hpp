#pragma once

#include <stdexcept>
#include <string>

namespace elforensics {

// Base for every error raised by the library. Domain errors map to CLI exit
// code 1, IoError to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A metric was requested for a station whose denominator is zero.
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

// Invalid configuration values (bin width, band, iteration count, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// File could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace elforensics
