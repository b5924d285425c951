#pragma once

#include <stdexcept>
#include <string>

namespace faircorpus {

// Error categories map onto the CLI exit-code convention:
// usage -> 1, data -> 2, runtime -> 3.
enum class ErrorKind { usage, data, runtime };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Malformed or contradictory user input (bad flags, bad config values).
class UsageError : public Error {
public:
    explicit UsageError(std::string message) : Error(ErrorKind::usage, std::move(message)) {}
};

// Problems with the data itself: manifest schema violations, unparsable
// files, inconsistent annotations.
class DataError : public Error {
public:
    explicit DataError(std::string message) : Error(ErrorKind::data, std::move(message)) {}
};

// Environment failures: network, filesystem, resource limits.
class RuntimeError : public Error {
public:
    explicit RuntimeError(std::string message) : Error(ErrorKind::runtime, std::move(message)) {}
};

} // namespace faircorpus
