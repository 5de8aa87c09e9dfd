#pragma once

#include "vort2d/operators.hpp"

namespace vort2d {

struct SmagorinskyParams {
    double cs = 0.1;  // overall best in the C_s sweep
    double delta = kTwoPi / 65.0;

    void validate() const {
        if (cs < 0.0) throw ConfigError("smagorinsky: cs must be >= 0");
        if (!(delta > 0.0)) throw ConfigError("smagorinsky: delta must be > 0");
    }
};

namespace detail {

// a = ψ_xx - ψ_yy and b = ψ_xy in spectral form; the two strain ingredients
// of the vorticity-form closure.
inline void strain_spectra(const SpectralField& psi, SpectralField& a, SpectralField& b) {
    const auto& g = *psi.grid;
    a = SpectralField(g);
    b = SpectralField(g);
    const int n = g.n();
    for (int ix = 0; ix < n; ++ix) {
        const double kx = g.wavenumber(ix);
        const std::size_t row = g.idx(ix, 0);
        for (int iy = 0; iy < n; ++iy) {
            const double ky = g.wavenumber(iy);
            a.c[row + iy] = (ky * ky - kx * kx) * psi.c[row + iy];
            b.c[row + iy] = -kx * ky * psi.c[row + iy];
        }
    }
}

// r̃ = -[(∂xx-∂yy)(ν_s (ψxx-ψyy)) + 4 ∂xy(ν_s ψxy)] with the ν_s products
// formed on the 3/2-rule extended grid, matching the Jacobian treatment.
// `nu_at(a, b)` maps the pointwise strain components to ν_s.
template <class NuFn>
SpectralField smagorinsky_assemble_with(const SpectralField& psi_hat, NuFn&& nu_at) {
    const auto& g = *psi_hat.grid;
    const auto& fine = grid_of(g.dealias_n());

    SpectralField a, b;
    strain_spectra(psi_hat, a, b);
    static thread_local PhysicalField pa, pb;
    to_physical_pair_on(a, b, fine, pa, pb);

    PhysicalField prod_a(fine), prod_b(fine);
    for (std::size_t i = 0; i < prod_a.v.size(); ++i) {
        const double nu_s = nu_at(pa.v[i], pb.v[i]);
        prod_a.v[i] = nu_s * pa.v[i];
        prod_b.v[i] = nu_s * pb.v[i];
    }
    const SpectralField pa_hat = to_spectral_truncated(prod_a, g);
    const SpectralField pb_hat = to_spectral_truncated(prod_b, g);

    SpectralField out(g);
    const int n = g.n();
    for (int ix = 0; ix < n; ++ix) {
        const double kx = g.wavenumber(ix);
        const std::size_t row = g.idx(ix, 0);
        for (int iy = 0; iy < n; ++iy) {
            const double ky = g.wavenumber(iy);
            out.c[row + iy] =
                (kx * kx - ky * ky) * pa_hat.c[row + iy] + 4.0 * kx * ky * pb_hat.c[row + iy];
        }
    }
    return out;
}

// Constant-viscosity assembly; reduces analytically to -ν_s ∇²ω̄.
inline SpectralField smagorinsky_assemble(const SpectralField& psi_hat, double nu_const) {
    return smagorinsky_assemble_with(psi_hat, [nu_const](double, double) { return nu_const; });
}

}  // namespace detail

/// Pointwise eddy viscosity ν_s = (C_s Δ)² sqrt(4 ψ_xy² + (ψ_xx - ψ_yy)²)
/// on the state's own grid.
template <class State>
PhysicalField eddy_viscosity(const State& state, const SmagorinskyParams& p) {
    p.validate();
    SpectralField a, b;
    detail::strain_spectra(state.psi_hat, a, b);
    static thread_local PhysicalField pa, pb;
    to_physical_pair_on(a, b, *state.psi_hat.grid, pa, pb);
    PhysicalField nu_s(*state.psi_hat.grid);
    const double pref = p.cs * p.cs * p.delta * p.delta;
    for (std::size_t i = 0; i < nu_s.v.size(); ++i)
        nu_s.v[i] = pref * std::sqrt(4.0 * pb.v[i] * pb.v[i] + pa.v[i] * pa.v[i]);
    return nu_s;
}

/// Vorticity-form Smagorinsky SGS field r̃, oriented so that the tendency
/// contribution -r̃ is dissipative.
template <class State>
SpectralField smagorinsky_term(const State& state, const SmagorinskyParams& p) {
    p.validate();
    const double pref = p.cs * p.cs * p.delta * p.delta;
    return detail::smagorinsky_assemble_with(state.psi_hat, [pref](double a, double b) {
        return pref * std::sqrt(4.0 * b * b + a * a);
    });
}

}  // namespace vort2d
