#pragma once

#include "vort2d/filters.hpp"
#include "vort2d/solver.hpp"

namespace vort2d {

enum class QoiKind { Energy, Enstrophy };

/// A spatially-integrated quantity: energy or enstrophy over a wavenumber shell.
struct QoiSpec {
    QoiKind kind = QoiKind::Energy;
    int lo = 0;
    int hi = 0;

    std::string name() const {
        return std::string(kind == QoiKind::Energy ? "E" : "Z") + "[" + std::to_string(lo) +
               "," + std::to_string(hi) + "]";
    }
    bool operator==(const QoiSpec&) const = default;
};

/// E[0,15], Z[0,15], E[16,21], Z[16,21].
inline std::vector<QoiSpec> default_qois() {
    return {{QoiKind::Energy, 0, 15},
            {QoiKind::Enstrophy, 0, 15},
            {QoiKind::Energy, 16, 21},
            {QoiKind::Enstrophy, 16, 21}};
}

struct QoiVector {
    double t_days = 0.0;
    std::vector<double> values;
};

/// Precomputed band masks for a QoI set on one grid. The round masks are
/// intersected with the resolved square cutoff so values computed on a finer
/// grid match the coarse-grid values.
class QoiEngine {
public:
    QoiEngine(const WavenumberGrid& grid, std::vector<QoiSpec> specs, int cutoff = -1)
        : grid_(&grid), specs_(std::move(specs)) {
        cutoff_ = cutoff < 0 ? grid.max_wavenumber() : cutoff;
        const FilterMask square = make_filter(SharpSquare{cutoff_}, grid);
        for (const auto& q : specs_) {
            if (q.lo < 0 || q.lo > q.hi)
                throw ConfigError("qoi " + q.name() + ": invalid band");
            FilterMask band = intersect(make_filter(RoundBand{q.lo, q.hi}, grid), square);
            if (band.support.empty())
                throw ConfigError("qoi " + q.name() + ": band outside resolved range");
            masks_.push_back(std::move(band));
        }
    }

    int d() const { return int(specs_.size()); }
    int cutoff() const { return cutoff_; }
    const WavenumberGrid& grid() const { return *grid_; }
    const std::vector<QoiSpec>& specs() const { return specs_; }
    const FilterMask& mask(int i) const { return masks_[i]; }

    double evaluate_one(int i, const FlowState& s) const {
        const auto& q = specs_[i];
        if (q.kind == QoiKind::Energy)
            return -0.5 * filtered_inner_product(masks_[i], s.psi_hat, s.w_hat);
        return 0.5 * filtered_inner_product(masks_[i], s.w_hat, s.w_hat);
    }

    QoiVector evaluate(const FlowState& s) const {
        QoiVector out;
        out.t_days = s.t_days();
        out.values.resize(specs_.size());
        for (std::size_t i = 0; i < specs_.size(); ++i) out.values[i] = evaluate_one(int(i), s);
        return out;
    }

    /// Basis fields: V_i = -R_i ψ̄ for energy, R_i ω̄ for enstrophy (T_i = V_i).
    std::vector<SpectralField> basis(const FlowState& s) const {
        std::vector<SpectralField> v;
        v.reserve(specs_.size());
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            SpectralField f = apply_filter(masks_[i], specs_[i].kind == QoiKind::Energy
                                                          ? s.psi_hat
                                                          : s.w_hat);
            if (specs_[i].kind == QoiKind::Energy) f *= -1.0;
            v.push_back(std::move(f));
        }
        return v;
    }

    /// S_[l,m] = (R ψ̄, R ψ̄)/2 for the band of spec i.
    double squared_streamfunction(int i, const FlowState& s) const {
        return 0.5 * filtered_inner_product(masks_[i], s.psi_hat, s.psi_hat);
    }

private:
    const WavenumberGrid* grid_;
    std::vector<QoiSpec> specs_;
    std::vector<FilterMask> masks_;
    int cutoff_;
};

inline double compute_qoi(const QoiSpec& spec, const FlowState& s, int cutoff = -1) {
    QoiEngine e(*s.w_hat.grid, {spec}, cutoff);
    return e.evaluate_one(0, s);
}

inline double squared_streamfunction(const FlowState& s, int lo, int hi, int cutoff = -1) {
    QoiEngine e(*s.w_hat.grid, {{QoiKind::Energy, lo, hi}}, cutoff);
    return e.squared_streamfunction(0, s);
}

inline std::vector<SpectralField> compute_basis(const FlowState& s,
                                                const std::vector<QoiSpec>& specs,
                                                int cutoff = -1) {
    QoiEngine e(*s.w_hat.grid, specs, cutoff);
    return e.basis(s);
}

}  // namespace vort2d
