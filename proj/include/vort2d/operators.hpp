#pragma once

#include "vort2d/fft.hpp"

namespace vort2d {

inline SpectralField gradient_x(const SpectralField& f) {
    const auto& g = *f.grid;
    SpectralField out(g);
    const int n = g.n();
    for (int ix = 0; ix < n; ++ix) {
        const Complex ik(0.0, double(g.wavenumber(ix)));
        const std::size_t row = g.idx(ix, 0);
        for (int iy = 0; iy < n; ++iy) out.c[row + iy] = ik * f.c[row + iy];
    }
    return out;
}

inline SpectralField gradient_y(const SpectralField& f) {
    const auto& g = *f.grid;
    SpectralField out(g);
    const int n = g.n();
    for (int ix = 0; ix < n; ++ix) {
        const std::size_t row = g.idx(ix, 0);
        for (int iy = 0; iy < n; ++iy)
            out.c[row + iy] = Complex(0.0, double(g.wavenumber(iy))) * f.c[row + iy];
    }
    return out;
}

inline std::pair<SpectralField, SpectralField> gradient(const SpectralField& f) {
    return {gradient_x(f), gradient_y(f)};
}

inline SpectralField laplacian(const SpectralField& f) {
    SpectralField out(*f.grid);
    const auto& ksq = f.grid->k_sq();
    for (std::size_t i = 0; i < out.c.size(); ++i) out.c[i] = -ksq[i] * f.c[i];
    return out;
}

/// Inverse of the spectral Laplacian; the k = 0 mode maps to 0.
inline SpectralField inverse_laplacian(const SpectralField& f) {
    SpectralField out(*f.grid);
    const auto& ksq = f.grid->k_sq();
    for (std::size_t i = 0; i < out.c.size(); ++i)
        out.c[i] = (ksq[i] == 0.0) ? Complex{} : -f.c[i] / ksq[i];
    return out;
}

namespace detail {

// Workspace for the dealiased Jacobian: one packed input buffer (gradient
// pairs ∂x f + i ∂y f land directly in the zero-padded extended grid) and two
// inverse-transform outputs. The padding region is zeroed once and left
// untouched by subsequent packs of the same source size.
struct JacWork {
    fftw_complex* in = nullptr;
    fftw_complex* out_a = nullptr;
    fftw_complex* out_b = nullptr;
    double* jr = nullptr;
    std::size_t n = 0;
    int packed_src = -1;

    void ensure(std::size_t fine_nn) {
        if (fine_nn <= n) return;
        release();
        in = fftw_alloc_complex(fine_nn);
        out_a = fftw_alloc_complex(fine_nn);
        out_b = fftw_alloc_complex(fine_nn);
        jr = fftw_alloc_real(fine_nn);
        n = fine_nn;
        for (std::size_t i = 0; i < fine_nn; ++i) in[i][0] = in[i][1] = 0.0;
        packed_src = -1;
    }
    void release() {
        if (in) fftw_free(in);
        if (out_a) fftw_free(out_a);
        if (out_b) fftw_free(out_b);
        if (jr) fftw_free(jr);
        in = out_a = out_b = nullptr;
        jr = nullptr;
        n = 0;
    }
    ~JacWork() { release(); }
};

inline JacWork& jac_work() {
    thread_local JacWork w;
    return w;
}

// in[target mode] = f̂_k (i kx - ky), i.e. the packed pair ∂x f + i ∂y f.
inline void pack_gradient_pair(const SpectralField& f, const WavenumberGrid& fine,
                               fftw_complex* in) {
    const auto& gs = *f.grid;
    const int keep = gs.max_wavenumber();
    for (int kx = -keep; kx <= keep; ++kx) {
        const std::size_t rs = gs.idx(gs.index_of(kx), 0);
        const std::size_t rd = fine.idx(fine.index_of(kx), 0);
        for (int ky = -keep; ky <= keep; ++ky) {
            const Complex v = f.c[rs + gs.index_of(ky)] * Complex(-double(ky), double(kx));
            const std::size_t t = rd + fine.index_of(ky);
            in[t][0] = v.real();
            in[t][1] = v.imag();
        }
    }
}

}  // namespace detail

/// Dealiased Jacobian J(a,b) = a_x b_y - a_y b_x via the 3/2 rule: spectral
/// derivatives packed two-per-complex-transform, pointwise product on the
/// extended grid, truncation back to the source grid.
inline SpectralField jacobian(const SpectralField& a, const SpectralField& b) {
    if (a.grid != b.grid) throw SpectralError("jacobian: grid mismatch");
    const auto& fine = grid_of(a.grid->dealias_n());
    const auto& plans = detail::plans_of(fine.n());
    auto& w = detail::jac_work();
    const std::size_t nn = fine.size();
    w.ensure(nn);
    if (w.packed_src != a.grid->n() && w.packed_src != -1)
        for (std::size_t i = 0; i < nn; ++i) w.in[i][0] = w.in[i][1] = 0.0;
    w.packed_src = a.grid->n();

    detail::pack_gradient_pair(a, fine, w.in);
    fftw_execute_dft(plans.c2c_bwd, w.in, w.out_a);
    detail::pack_gradient_pair(b, fine, w.in);
    fftw_execute_dft(plans.c2c_bwd, w.in, w.out_b);

    const double inv = 1.0 / (double(a.n()) * a.n());
    const double inv2 = inv * inv;
    for (std::size_t i = 0; i < nn; ++i)
        w.jr[i] = (w.out_a[i][0] * w.out_b[i][1] - w.out_a[i][1] * w.out_b[i][0]) * inv2;

    // Forward r2c on the extended grid, keeping only the source modes.
    fftw_complex* half = detail::scratch().complex_a(std::size_t(fine.n()) * (fine.n() / 2 + 1));
    fftw_execute_dft_r2c(plans.r2c, w.jr, half);
    SpectralField out(*a.grid);
    const auto& gc = *a.grid;
    const int nh = fine.n() / 2 + 1;
    const int keep = gc.max_wavenumber();
    const double scale = (double(gc.n()) * gc.n()) / (double(fine.n()) * fine.n());
    for (int kx = -keep; kx <= keep; ++kx) {
        const std::size_t row = std::size_t(fine.index_of(kx)) * nh;
        for (int ky = 0; ky <= keep; ++ky) {
            const Complex v = scale * Complex{half[row + ky][0], half[row + ky][1]};
            out.c[gc.idx(gc.index_of(kx), ky)] = v;
            if (ky > 0) out.c[gc.idx(gc.index_of(-kx), gc.index_of(-ky))] = std::conj(v);
        }
    }
    return out;
}

/// Discrete approximation of (1/(2π)²) ∬ f g dx dy as (1/n⁴) Σ f̂ ĝ*.
/// The result is real for conjugate-symmetric inputs; a residual imaginary
/// part above 1e-12 relative is reported as an error.
inline double inner_product(const SpectralField& f, const SpectralField& g) {
    if (f.grid != g.grid) throw SpectralError("inner_product: grid mismatch");
    Complex acc{};
    double scale = 0.0;
    for (std::size_t i = 0; i < f.c.size(); ++i) {
        acc += f.c[i] * std::conj(g.c[i]);
        scale += std::abs(f.c[i]) * std::abs(g.c[i]);
    }
    const double n4 = double(f.n()) * f.n() * double(f.n()) * f.n();
    if (std::abs(acc.imag()) > 1e-12 * scale)
        throw SpectralError("inner_product: non-negligible imaginary part");
    return acc.real() / n4;
}

inline double norm(const SpectralField& f) {
    double acc = 0.0;
    for (const auto& v : f.c) acc += std::norm(v);
    const double n2 = double(f.n()) * f.n();
    return std::sqrt(acc) / n2;
}

/// Restrict to the modes ‖k‖_∞ ≤ (n_target-1)/2, preserving physical amplitudes.
inline SpectralField coarse_grain(const SpectralField& f, const WavenumberGrid& target) {
    if (target.n() > f.n()) throw SpectralError("coarse_grain: target grid larger than source");
    SpectralField out(target);
    const double scale = (double(target.n()) * target.n()) / (double(f.n()) * f.n());
    detail::remap_modes(f, out, scale);
    return out;
}

}  // namespace vort2d
