#pragma once

#include <stdexcept>
#include <string>

namespace ama {

/// Caller violated an operation's precondition (bad argument, bad config value).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numeric result would be non-finite; the target object is left unchanged.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Experiment configuration could not be parsed or validated.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ama
