#pragma once

#include <stdexcept>
#include <string>

namespace tvdn {

// Malformed arguments, shape mismatches, unreadable files.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An iterative method hit its iteration cap before reaching tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InputError(message);
}

}  // namespace tvdn
