#pragma once

#include <stdexcept>
#include <string>

namespace prro {

// Base for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data or configuration (CLI exit code 2).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Filesystem / external-process failures (CLI exit code 3).
class IoError : public Error {
public:
    using Error::Error;
};

// A pipeline stage failed; carries the stage name (CLI exit code 3).
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error("stage '" + stage + "': " + message), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace prro
