#pragma once

#include <stdexcept>
#include <string>

namespace joinscout {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ProfilingError : public Error {
public:
    using Error::Error;
};

/// Invalid argument to a metric (empty set, value out of range, ...).
class MetricError : public Error {
public:
    using Error::Error;
};

/// Distance-vector layout of a model, store, or vector does not match.
class LayoutError : public Error {
public:
    using Error::Error;
};

class ModelError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public ModelError {
public:
    using ModelError::ModelError;
};

class DiscoveryError : public Error {
public:
    using Error::Error;
};

} // namespace joinscout
