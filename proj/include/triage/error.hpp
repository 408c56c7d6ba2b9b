#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace triage {

/// Input data is malformed or inconsistent (bad file, shape mismatch, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GridMismatch : public DataError {
public:
    using DataError::DataError;
};

/// The granulometric curve starts at zero mass, so the size distribution is undefined.
class EmptyImage : public DataError {
public:
    EmptyImage() : DataError("image has zero total mass (V[0] = 0)") {}
};

class FormatError : public DataError {
public:
    FormatError(const std::string& what, std::size_t line = 0)
        : DataError(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace triage
