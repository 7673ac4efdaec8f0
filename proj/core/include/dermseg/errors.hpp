#pragma once

#include <stdexcept>
#include <string>

namespace dermseg {

// File and decode problems; carries the offending path in the message.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or diverged optimization.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dermseg
