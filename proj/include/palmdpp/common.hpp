#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace palmdpp {

using cplx = std::complex<double>;

inline constexpr const char* version = "0.1.0";

inline constexpr double pi = std::numbers::pi;
inline constexpr double eps = 2.220446049250313e-16;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the declared domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Parameter violates a precondition, e.g. Re s <= -1/2.
struct ParameterError : Error {
    using Error::Error;
};

struct PoleError : Error {
    using Error::Error;
};

// Series, quadrature or recurrence failed to converge.
struct ConvergenceError : Error {
    using Error::Error;
};

// Result would be meaningless (ill-conditioning, lost positivity, ...).
struct NumericalError : Error {
    using Error::Error;
};

inline double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

inline bool is_finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace palmdpp
