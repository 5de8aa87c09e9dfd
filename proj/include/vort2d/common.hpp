#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace vort2d {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Appendix-A time unit: 2π non-dimensional units per simulated day.
inline constexpr double kDay = kTwoPi;

inline double days_to_time(double days) { return days * kDay; }
inline double time_to_days(double t) { return t / kDay; }

struct SpectralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace vort2d
