#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace nodal {

using cplx = std::complex<double>;

/// Raised when an iteration fails to converge or a verified numeric
/// bound is violated. Distinct from std::invalid_argument /
/// std::domain_error, which signal bad inputs.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double pi = 3.14159265358979323846;

}  // namespace nodal
