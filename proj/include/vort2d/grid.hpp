#pragma once

#include <memory>
#include <unordered_map>
#include <mutex>
#include <vector>

#include "vort2d/common.hpp"

namespace vort2d {

/// Square periodic Fourier grid with n points per side, n odd.
///
/// Mode storage is row-major over (ix, iy) with the usual DFT wrap:
/// wavenumber(i) = i for i <= (n-1)/2, i - n otherwise. Odd n guarantees
/// every mode k has its partner -k on the grid (no unpaired Nyquist line).
class WavenumberGrid {
public:
    explicit WavenumberGrid(int n) : n_(n) {
        if (n < 3 || n % 2 == 0)
            throw ConfigError("grid size must be odd and >= 3, got " + std::to_string(n));
        wave_.resize(n_);
        for (int i = 0; i < n_; ++i) wave_[i] = (i <= (n_ - 1) / 2) ? i : i - n_;
        k_sq_.resize(std::size_t(n_) * n_);
        for (int ix = 0; ix < n_; ++ix)
            for (int iy = 0; iy < n_; ++iy) {
                const double kx = wave_[ix], ky = wave_[iy];
                k_sq_[idx(ix, iy)] = kx * kx + ky * ky;
            }
    }

    int n() const { return n_; }
    std::size_t size() const { return std::size_t(n_) * n_; }
    int max_wavenumber() const { return (n_ - 1) / 2; }

    // Extended grid size for 3/2-rule dealiasing; M odd, alias-free for
    // quadratic products of fields resolved up to (n-1)/2.
    int dealias_n() const { return 3 * (n_ - 1) / 2 + 1; }

    int wavenumber(int i) const { return wave_[i]; }
    // Storage index of wavenumber k in [-(n-1)/2, (n-1)/2].
    int index_of(int k) const { return k >= 0 ? k : k + n_; }

    std::size_t idx(int ix, int iy) const { return std::size_t(ix) * n_ + iy; }
    double k_sq(std::size_t flat) const { return k_sq_[flat]; }
    const std::vector<double>& k_sq() const { return k_sq_; }

    double x_of(int i) const { return kTwoPi * i / n_; }

    bool operator==(const WavenumberGrid& o) const { return n_ == o.n_; }

private:
    int n_;
    std::vector<int> wave_;
    std::vector<double> k_sq_;
};

/// Process-wide grid registry so that value types can hold stable pointers.
inline const WavenumberGrid& grid_of(int n) {
    static std::mutex m;
    static std::unordered_map<int, std::unique_ptr<WavenumberGrid>> grids;
    std::lock_guard<std::mutex> lock(m);
    auto it = grids.find(n);
    if (it == grids.end())
        it = grids.emplace(n, std::make_unique<WavenumberGrid>(n)).first;
    return *it->second;
}

}  // namespace vort2d
