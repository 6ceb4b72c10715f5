#pragma once

#include <stdexcept>
#include <string>

namespace salience {

// Contract violations on inputs (bad shapes, labels, flags, config values).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem / decode failures.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed CLI invocation or config file (maps to exit code 2).
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace salience
