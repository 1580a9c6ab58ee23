#pragma once

#include <stdexcept>
#include <string>

namespace wavemap {

enum class ErrorKind {
    invalid_argument,
    incompatible_grids,
    numerical_failure,
    resolution_error,
    solvability_violation,
    invalid_regime,
    grid_too_coarse,
    extraction_failed,
    construction_failed,
    insufficient_data,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::incompatible_grids: return "incompatible-grids";
        case ErrorKind::numerical_failure: return "numerical-failure";
        case ErrorKind::resolution_error: return "resolution-error";
        case ErrorKind::solvability_violation: return "solvability-violation";
        case ErrorKind::invalid_regime: return "invalid-regime";
        case ErrorKind::grid_too_coarse: return "grid-too-coarse";
        case ErrorKind::extraction_failed: return "extraction-failed";
        case ErrorKind::construction_failed: return "construction-failed";
        case ErrorKind::insufficient_data: return "insufficient-data";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind and the module that raised it.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string module, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " [" + module + "]: " + what),
          kind_(kind), module_(std::move(module)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }

private:
    ErrorKind kind_;
    std::string module_;
};

}  // namespace wavemap
