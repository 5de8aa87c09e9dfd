#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vort2d/grid.hpp"

namespace vort2d {

/// Complex Fourier coefficients of a real 2D field, full n×n storage.
///
/// Normalization follows the discrete expansion
///   f(x_i, y_j) = (1/n²) Σ_k f̂_k exp(i(k₁x_i + k₂y_j)),
/// so a unit-amplitude cosine mode carries coefficients of magnitude n²/2.
struct SpectralField {
    const WavenumberGrid* grid = nullptr;
    std::vector<Complex> c;

    SpectralField() = default;
    explicit SpectralField(const WavenumberGrid& g) : grid(&g), c(g.size(), Complex{}) {}

    int n() const { return grid->n(); }
    Complex& at(int kx, int ky) { return c[grid->idx(grid->index_of(kx), grid->index_of(ky))]; }
    Complex at(int kx, int ky) const {
        return c[grid->idx(grid->index_of(kx), grid->index_of(ky))];
    }

    SpectralField& operator+=(const SpectralField& o) {
        for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        for (std::size_t i = 0; i < c.size(); ++i) c[i] -= o.c[i];
        return *this;
    }
    SpectralField& operator*=(double s) {
        for (auto& v : c) v *= s;
        return *this;
    }

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

    double max_abs() const {
        double m = 0.0;
        for (const auto& v : c) m = std::max(m, std::abs(v));
        return m;
    }
    bool finite() const {
        for (const auto& v : c)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }
};

/// Real-space samples on the uniform grid x_i = 2πi/n, y_j = 2πj/n, row-major (x outer).
struct PhysicalField {
    const WavenumberGrid* grid = nullptr;
    std::vector<double> v;

    PhysicalField() = default;
    explicit PhysicalField(const WavenumberGrid& g) : grid(&g), v(g.size(), 0.0) {}

    int n() const { return grid->n(); }
    double& at(int i, int j) { return v[grid->idx(i, j)]; }
    double at(int i, int j) const { return v[grid->idx(i, j)]; }

    bool finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
    double max_abs() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
};

/// Largest conjugate-symmetry violation |f̂(-k) - conj(f̂(k))| relative to max |f̂|.
inline double conjugate_asymmetry(const SpectralField& f) {
    const auto& g = *f.grid;
    const int n = g.n();
    double scale = f.max_abs();
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (int ix = 0; ix < n; ++ix) {
        const int jx = (n - ix) % n;
        for (int iy = 0; iy < n; ++iy) {
            const int jy = (n - iy) % n;
            const Complex d = f.c[g.idx(jx, jy)] - std::conj(f.c[g.idx(ix, iy)]);
            worst = std::max(worst, std::abs(d));
        }
    }
    return worst / scale;
}

}  // namespace vort2d
