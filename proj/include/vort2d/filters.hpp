#pragma once

#include <cmath>
#include <variant>

#include "vort2d/field.hpp"

namespace vort2d {

/// Sharp square cutoff: keeps ‖k‖_∞ ≤ C.
struct SharpSquare {
    int cutoff;
};

/// Round shell: keeps l - 1/2 ≤ ‖k‖₂ < m + 1/2.
struct RoundBand {
    int lo;
    int hi;
};

/// Ĝ(k) = exp(-‖k‖² Δ_F² / 24).
struct GaussianFilter {
    double width;
};

using FilterKind = std::variant<SharpSquare, RoundBand, GaussianFilter>;

/// Per-mode real multiplier. For 0/1 masks `support` lists the kept indices,
/// which the QoI and pattern machinery uses to keep inner products band-local.
struct FilterMask {
    const WavenumberGrid* grid = nullptr;
    FilterKind kind;
    std::vector<double> w;
    std::vector<std::size_t> support;

    bool binary() const { return !std::holds_alternative<GaussianFilter>(kind); }
};

inline FilterMask make_filter(const FilterKind& kind, const WavenumberGrid& g) {
    FilterMask mask;
    mask.grid = &g;
    mask.kind = kind;
    mask.w.assign(g.size(), 0.0);
    const int n = g.n();
    if (const auto* rb = std::get_if<RoundBand>(&kind)) {
        if (rb->lo < 0 || rb->lo > rb->hi)
            throw ConfigError("make_filter: invalid round band [" + std::to_string(rb->lo) +
                              "," + std::to_string(rb->hi) + "]");
    }
    if (const auto* sq = std::get_if<SharpSquare>(&kind)) {
        if (sq->cutoff < 0) throw ConfigError("make_filter: negative cutoff");
    }
    if (const auto* ga = std::get_if<GaussianFilter>(&kind)) {
        if (!(ga->width > 0.0)) throw ConfigError("make_filter: Gaussian width must be positive");
    }
    for (int ix = 0; ix < n; ++ix)
        for (int iy = 0; iy < n; ++iy) {
            const int kx = g.wavenumber(ix), ky = g.wavenumber(iy);
            const std::size_t i = g.idx(ix, iy);
            if (const auto* sq = std::get_if<SharpSquare>(&kind)) {
                mask.w[i] = (std::abs(kx) <= sq->cutoff && std::abs(ky) <= sq->cutoff) ? 1.0 : 0.0;
            } else if (const auto* rb = std::get_if<RoundBand>(&kind)) {
                const double r = std::sqrt(double(kx) * kx + double(ky) * ky);
                mask.w[i] = (r >= rb->lo - 0.5 && r < rb->hi + 0.5) ? 1.0 : 0.0;
            } else {
                const auto& ga = std::get<GaussianFilter>(kind);
                mask.w[i] = std::exp(-g.k_sq(i) * ga.width * ga.width / 24.0);
            }
            if (mask.w[i] != 0.0) mask.support.push_back(i);
        }
    return mask;
}

/// Intersection of two masks on one grid (pointwise product of weights).
inline FilterMask intersect(const FilterMask& a, const FilterMask& b) {
    FilterMask mask;
    mask.grid = a.grid;
    mask.kind = a.kind;
    mask.w.assign(a.w.size(), 0.0);
    for (std::size_t i : a.support) {
        mask.w[i] = a.w[i] * b.w[i];
        if (mask.w[i] != 0.0) mask.support.push_back(i);
    }
    return mask;
}

inline SpectralField apply_filter(const FilterMask& mask, const SpectralField& f) {
    if (mask.grid != f.grid) throw SpectralError("apply_filter: grid mismatch");
    SpectralField out(*f.grid);
    for (std::size_t i : mask.support) out.c[i] = mask.w[i] * f.c[i];
    return out;
}

/// (R f, R g) evaluated over the mask support only.
inline double filtered_inner_product(const FilterMask& mask, const SpectralField& f,
                                     const SpectralField& g) {
    if (mask.grid != f.grid || mask.grid != g.grid)
        throw SpectralError("filtered_inner_product: grid mismatch");
    double acc = 0.0;
    for (std::size_t i : mask.support)
        acc += mask.w[i] * mask.w[i] * (f.c[i].real() * g.c[i].real() + f.c[i].imag() * g.c[i].imag());
    const double n2 = double(f.n()) * f.n();
    return acc / (n2 * n2);
}

inline double filtered_norm(const FilterMask& mask, const SpectralField& f) {
    double acc = 0.0;
    for (std::size_t i : mask.support) acc += mask.w[i] * mask.w[i] * std::norm(f.c[i]);
    const double n2 = double(f.n()) * f.n();
    return std::sqrt(acc) / n2;
}

}  // namespace vort2d
