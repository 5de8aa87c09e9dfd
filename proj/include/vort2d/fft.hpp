#pragma once

#include <fftw3.h>

#if defined(__GLIBC__) || defined(__linux__)
#include <malloc.h>
#endif

#include <map>
#include <mutex>

#include "vort2d/field.hpp"

namespace vort2d {
namespace detail {

// Plans are created once per grid size under a lock (FFTW planning is not
// thread-safe) and executed through the new-array interface on per-thread
// scratch buffers, which is safe for concurrent replicas. FFTW_ESTIMATE only:
// measured planning picks machine-dependent algorithms and would break
// byte-identical reruns. Large grids use two statically partitioned FFTW
// threads; the decomposition is part of the plan, so results stay
// bit-reproducible.
inline int plan_threads(int n) { return n >= 193 ? 2 : 1; }

struct PlanSet {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
    fftw_plan c2c_fwd = nullptr;
    fftw_plan c2c_bwd = nullptr;

    explicit PlanSet(int n) {
        static const bool threads_ready = [] {
#if defined(__GLIBC__)
            // Field-sized vectors churn through mmap at glibc's default
            // threshold; keep them on the arena free lists instead.
            mallopt(M_MMAP_THRESHOLD, 64 << 20);
            mallopt(M_TRIM_THRESHOLD, 64 << 20);
#endif
#if defined(VORT2D_NO_FFTW_THREADS)
            return false;
#else
            return fftw_init_threads() != 0;
#endif
        }();
#if !defined(VORT2D_NO_FFTW_THREADS)
        fftw_plan_with_nthreads(threads_ready ? plan_threads(n) : 1);
#else
        (void)threads_ready;
#endif
        const std::size_t nn = std::size_t(n) * n;
        const std::size_t nh = std::size_t(n) * (n / 2 + 1);
        double* re = fftw_alloc_real(nn);
        fftw_complex* ca = fftw_alloc_complex(nn);
        fftw_complex* cb = fftw_alloc_complex(nn);
        fftw_complex* ch = fftw_alloc_complex(nh);
        r2c = fftw_plan_dft_r2c_2d(n, n, re, ch, FFTW_ESTIMATE);
        c2r = fftw_plan_dft_c2r_2d(n, n, ch, re, FFTW_ESTIMATE);
        c2c_fwd = fftw_plan_dft_2d(n, n, ca, cb, FFTW_FORWARD, FFTW_ESTIMATE);
        c2c_bwd = fftw_plan_dft_2d(n, n, ca, cb, FFTW_BACKWARD, FFTW_ESTIMATE);
        fftw_free(re);
        fftw_free(ca);
        fftw_free(cb);
        fftw_free(ch);
    }
    PlanSet(const PlanSet&) = delete;
    ~PlanSet() {
        fftw_destroy_plan(r2c);
        fftw_destroy_plan(c2r);
        fftw_destroy_plan(c2c_fwd);
        fftw_destroy_plan(c2c_bwd);
    }
};

inline const PlanSet& plans_of(int n) {
    static std::mutex m;
    static std::map<int, std::unique_ptr<PlanSet>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<PlanSet>(n)).first;
    return *it->second;
}

// Grow-only per-thread scratch, fftw-aligned to satisfy new-array execution.
class Scratch {
public:
    fftw_complex* complex_a(std::size_t n) { return get(a_, n); }
    fftw_complex* complex_b(std::size_t n) { return get(b_, n); }
    double* real(std::size_t n) {
        if (n > rn_) {
            if (r_) fftw_free(r_);
            r_ = fftw_alloc_real(n);
            rn_ = n;
        }
        return r_;
    }
    ~Scratch() {
        if (a_.p) fftw_free(a_.p);
        if (b_.p) fftw_free(b_.p);
        if (r_) fftw_free(r_);
    }

private:
    struct Buf {
        fftw_complex* p = nullptr;
        std::size_t n = 0;
    };
    static fftw_complex* get(Buf& b, std::size_t n) {
        if (n > b.n) {
            if (b.p) fftw_free(b.p);
            b.p = fftw_alloc_complex(n);
            b.n = n;
        }
        return b.p;
    }
    Buf a_, b_;
    double* r_ = nullptr;
    std::size_t rn_ = 0;
};

inline Scratch& scratch() {
    thread_local Scratch s;
    return s;
}

// Expand an r2c half-spectrum (ky >= 0) into full n×n conjugate-symmetric storage.
inline void expand_halfspectrum(const fftw_complex* half, SpectralField& out) {
    const auto& g = *out.grid;
    const int n = g.n();
    const int nh = n / 2 + 1;
    for (int ix = 0; ix < n; ++ix) {
        const int jx = (n - ix) % n;
        for (int iyh = 0; iyh < nh; ++iyh) {
            const Complex v{half[std::size_t(ix) * nh + iyh][0],
                            half[std::size_t(ix) * nh + iyh][1]};
            out.c[g.idx(ix, iyh)] = v;
            if (iyh > 0) out.c[g.idx(jx, n - iyh)] = std::conj(v);
        }
    }
}

inline void compact_halfspectrum(const SpectralField& in, fftw_complex* half) {
    const auto& g = *in.grid;
    const int n = g.n();
    const int nh = n / 2 + 1;
    for (int ix = 0; ix < n; ++ix)
        for (int iyh = 0; iyh < nh; ++iyh) {
            const Complex v = in.c[g.idx(ix, iyh)];
            half[std::size_t(ix) * nh + iyh][0] = v.real();
            half[std::size_t(ix) * nh + iyh][1] = v.imag();
        }
}

// Copy the modes of `src` that fit on `dst.grid` into dst (both full storage),
// scaling by `scale`; dst is zeroed first. Works for padding and truncation.
inline void remap_modes(const SpectralField& src, SpectralField& dst, double scale) {
    const auto& gs = *src.grid;
    const auto& gd = *dst.grid;
    const int keep = std::min(gs.max_wavenumber(), gd.max_wavenumber());
    std::fill(dst.c.begin(), dst.c.end(), Complex{});
    for (int kx = -keep; kx <= keep; ++kx) {
        const std::size_t rs = gs.idx(gs.index_of(kx), 0);
        const std::size_t rd = gd.idx(gd.index_of(kx), 0);
        for (int ky = -keep; ky <= keep; ++ky)
            dst.c[rd + gd.index_of(ky)] = scale * src.c[rs + gs.index_of(ky)];
    }
}

}  // namespace detail

/// Forward DFT of a real field; coefficients follow the n²-scaled convention.
inline SpectralField to_spectral(const PhysicalField& f) {
    const int n = f.n();
    const auto& plans = detail::plans_of(n);
    auto& s = detail::scratch();
    double* in = s.real(f.v.size());
    fftw_complex* half = s.complex_a(std::size_t(n) * (n / 2 + 1));
    std::copy(f.v.begin(), f.v.end(), in);
    fftw_execute_dft_r2c(plans.r2c, in, half);
    SpectralField out(*f.grid);
    detail::expand_halfspectrum(half, out);
    return out;
}

/// Inverse DFT to a real field. Rejects inputs whose conjugate symmetry is
/// broken beyond `symmetry_tol` relative to the largest coefficient.
inline PhysicalField to_physical(const SpectralField& fh, double symmetry_tol = 1e-8) {
    const double asym = conjugate_asymmetry(fh);
    if (asym > symmetry_tol)
        throw SpectralError("to_physical: conjugate symmetry violated (relative " +
                            std::to_string(asym) + ")");
    const int n = fh.n();
    const auto& plans = detail::plans_of(n);
    auto& s = detail::scratch();
    fftw_complex* half = s.complex_a(std::size_t(n) * (n / 2 + 1));
    detail::compact_halfspectrum(fh, half);
    PhysicalField out(*fh.grid);
    double* re = s.real(out.v.size());
    fftw_execute_dft_c2r(plans.c2r, half, re);
    const double inv = 1.0 / (double(n) * n);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = re[i] * inv;
    return out;
}

/// Inverse transform onto an equal or finer grid (zero padding), preserving
/// physical amplitudes.
inline PhysicalField to_physical_on(const SpectralField& fh, const WavenumberGrid& target) {
    if (target.n() < fh.n())
        throw SpectralError("to_physical_on: target grid must be at least as fine");
    const int n = target.n();
    const auto& plans = detail::plans_of(n);
    auto& s = detail::scratch();
    SpectralField padded(target);
    detail::remap_modes(fh, padded, 1.0);
    fftw_complex* half = s.complex_a(std::size_t(n) * (n / 2 + 1));
    detail::compact_halfspectrum(padded, half);
    PhysicalField out(target);
    double* re = s.real(out.v.size());
    fftw_execute_dft_c2r(plans.c2r, half, re);
    const double inv = 1.0 / (double(fh.n()) * fh.n());
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = re[i] * inv;
    return out;
}

/// Inverse transform of two fields of one grid through a single complex FFT
/// (a + ib packing; both inputs must be conjugate-symmetric).
inline void to_physical_pair_on(const SpectralField& a, const SpectralField& b,
                                const WavenumberGrid& target, PhysicalField& pa,
                                PhysicalField& pb) {
    const int n = target.n();
    const auto& plans = detail::plans_of(n);
    auto& s = detail::scratch();
    const std::size_t nn = target.size();
    fftw_complex* in = s.complex_a(nn);
    fftw_complex* out = s.complex_b(nn);

    const auto& gs = *a.grid;
    const int keep = std::min(gs.max_wavenumber(), target.max_wavenumber());
    for (std::size_t i = 0; i < nn; ++i) in[i][0] = in[i][1] = 0.0;
    for (int kx = -keep; kx <= keep; ++kx) {
        const std::size_t rs = gs.idx(gs.index_of(kx), 0);
        const std::size_t rd = target.idx(target.index_of(kx), 0);
        for (int ky = -keep; ky <= keep; ++ky) {
            const Complex v = a.c[rs + gs.index_of(ky)] + Complex(0, 1) * b.c[rs + gs.index_of(ky)];
            in[rd + target.index_of(ky)][0] = v.real();
            in[rd + target.index_of(ky)][1] = v.imag();
        }
    }
    fftw_execute_dft(plans.c2c_bwd, in, out);

    if (pa.grid != &target) pa = PhysicalField(target);
    if (pb.grid != &target) pb = PhysicalField(target);
    const double inv = 1.0 / (double(a.n()) * a.n());
    for (std::size_t i = 0; i < nn; ++i) {
        pa.v[i] = out[i][0] * inv;
        pb.v[i] = out[i][1] * inv;
    }
}

/// Forward transform of a real field sampled on a fine grid, truncated onto
/// `target` with amplitude-preserving rescaling.
inline SpectralField to_spectral_truncated(const PhysicalField& f, const WavenumberGrid& target) {
    if (target.n() > f.n())
        throw SpectralError("to_spectral_truncated: target grid must be coarser");
    const int n = f.n();
    const auto& plans = detail::plans_of(n);
    auto& s = detail::scratch();
    double* in = s.real(f.v.size());
    fftw_complex* half = s.complex_a(std::size_t(n) * (n / 2 + 1));
    std::copy(f.v.begin(), f.v.end(), in);
    fftw_execute_dft_r2c(plans.r2c, in, half);
    SpectralField out(target);
    const int nh = n / 2 + 1;
    const int keep = target.max_wavenumber();
    const double scale = (double(target.n()) * target.n()) / (double(n) * n);
    const auto& gs = *f.grid;
    for (int kx = -keep; kx <= keep; ++kx) {
        const std::size_t row = std::size_t(gs.index_of(kx)) * nh;
        for (int ky = 0; ky <= keep; ++ky) {
            const Complex v = scale * Complex{half[row + ky][0], half[row + ky][1]};
            out.c[target.idx(target.index_of(kx), ky)] = v;
            if (ky > 0)
                out.c[target.idx(target.index_of(-kx), target.index_of(-ky))] = std::conj(v);
        }
    }
    return out;
}

}  // namespace vort2d
