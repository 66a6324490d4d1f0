#pragma once

#include <stdexcept>
#include <string>

namespace varprof {

/// Input or configuration rejected before any computation ran (CLI exit 2).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A solver failed to converge or a numerical precondition broke (CLI exit 3).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace varprof
