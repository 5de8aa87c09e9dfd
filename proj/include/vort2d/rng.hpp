#pragma once

#include <cstdint>
#include <cmath>
#include <random>

#include "vort2d/common.hpp"

namespace vort2d {

/// Seedable generator with self-contained distributions so that streams are
/// reproducible across standard libraries (std:: distributions are
/// implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    /// Uniform in [0,1) with 53-bit resolution.
    double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }

    /// Standard normal, Box-Muller; consumes two uniforms per call.
    double normal() {
        double u1 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    /// Uniform index in [0, n); fixed-point multiply, bias < n / 2^64.
    std::size_t index(std::size_t n) {
        if (n == 0) throw ConfigError("Rng::index: empty range");
        return std::size_t((static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace vort2d
