#pragma once

#include <Eigen/Dense>

#include <limits>

#include "vort2d/deltaq.hpp"
#include "vort2d/qoi.hpp"

namespace vort2d {

/// Patterns P_i = Σ_j c_ij T_j with c_ii = 1, built so each P_i moves exactly
/// one QoI: (V_k, R_k P_i) = 0 for k ≠ i.
struct PatternSystem {
    int d = 0;
    std::vector<SpectralField> patterns;
    std::vector<std::vector<double>> coeff;  // c[i][j]
    std::vector<double> diag;                // (V_i, R_i P_i)
    std::vector<double> gram;                // G[k][j] = (V_k, R_k T_j), row-major
    std::vector<double> basis_norm;          // ‖V_i‖
    std::vector<double> pattern_norm;        // ‖P_i‖
    std::vector<bool> active;                // false when the solve was degenerate
    double cond_max = 0.0;

    double gram_at(int k, int j) const { return gram[std::size_t(k) * d + j]; }

    /// max_{k≠i} |(V_k, R_k P_i)| / (‖V_k‖ ‖P_i‖), reconstructed from the Gram.
    double orthogonality_residual() const {
        double worst = 0.0;
        for (int i = 0; i < d; ++i) {
            if (!active[i]) continue;
            for (int k = 0; k < d; ++k) {
                if (k == i) continue;
                double r = 0.0;
                for (int j = 0; j < d; ++j) r += coeff[i][j] * gram_at(k, j);
                const double scale = basis_norm[k] * pattern_norm[i];
                if (scale > 0.0) worst = std::max(worst, std::abs(r) / scale);
            }
        }
        return worst;
    }
};

struct TauVector {
    double t_days = 0.0;
    std::vector<double> taus;
};

namespace detail {

// (f, g) restricted to the support of a binary mask; the fields are assumed
// band-limited to that support (true for V/T basis fields).
inline double masked_dot(const FilterMask& mask, const SpectralField& f, const SpectralField& g) {
    double acc = 0.0;
    for (std::size_t i : mask.support)
        acc += f.c[i].real() * g.c[i].real() + f.c[i].imag() * g.c[i].imag();
    const double n2 = double(f.n()) * f.n();
    return acc / (n2 * n2);
}

}  // namespace detail

/// Assemble and solve the d orthogonality systems for one time level.
/// Degenerate systems (singular within `cond_limit`) deactivate their pattern
/// instead of failing; callers decide whether that is an error.
inline PatternSystem solve_pattern_coefficients(const std::vector<SpectralField>& basis,
                                                const QoiEngine& engine,
                                                double cond_limit = 1e12) {
    const int d = int(basis.size());
    if (d == 0) throw ConfigError("solve_pattern_coefficients: empty basis");
    PatternSystem sys;
    sys.d = d;
    sys.gram.assign(std::size_t(d) * d, 0.0);
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j)
            sys.gram[std::size_t(k) * d + j] =
                detail::masked_dot(engine.mask(k), basis[k], basis[j]);
    sys.basis_norm.resize(d);
    for (int i = 0; i < d; ++i) sys.basis_norm[i] = std::sqrt(std::max(0.0, sys.gram_at(i, i)));

    // (T_j, T_k) for pattern norms; T_j is supported on mask j.
    std::vector<double> tdot(std::size_t(d) * d);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
            tdot[std::size_t(j) * d + k] = detail::masked_dot(engine.mask(j), basis[j], basis[k]);

    sys.coeff.assign(d, std::vector<double>(d, 0.0));
    sys.active.assign(d, true);
    sys.patterns.resize(d);
    sys.diag.assign(d, 0.0);
    sys.pattern_norm.assign(d, 0.0);

    // A basis field whose band content sits at the transform noise floor
    // (relative to the strongest same-kind basis field) makes its own pattern
    // degenerate and its orthogonality constraint vacuous; it is excluded
    // from the other solves.
    std::vector<double> kind_scale(d, 0.0);
    for (int j = 0; j < d; ++j) {
        const bool energy = engine.specs()[j].kind == QoiKind::Energy;
        for (int k = 0; k < d; ++k)
            if ((engine.specs()[k].kind == QoiKind::Energy) == energy)
                kind_scale[j] = std::max(kind_scale[j], sys.basis_norm[k]);
    }
    std::vector<bool> has_content(d);
    std::vector<int> usable;
    for (int j = 0; j < d; ++j) {
        has_content[j] = sys.basis_norm[j] > 1e-12 * kind_scale[j];
        if (has_content[j]) usable.push_back(j);
    }

    for (int i = 0; i < d; ++i) {
        sys.coeff[i][i] = 1.0;
        if (!has_content[i]) {
            sys.active[i] = false;
            sys.patterns[i] = SpectralField(engine.grid());
            continue;
        }
        std::vector<int> others;
        for (int j : usable)
            if (j != i) others.push_back(j);
        const int nsys = int(others.size());
        if (nsys > 0) {
            Eigen::MatrixXd A(nsys, nsys);
            Eigen::VectorXd rhs(nsys);
            for (int r = 0; r < nsys; ++r) {
                for (int c = 0; c < nsys; ++c) A(r, c) = sys.gram_at(others[r], others[c]);
                rhs(r) = -sys.gram_at(others[r], i);
            }
            const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
            const double smax = svd.singularValues()(0);
            const double smin = svd.singularValues()(nsys - 1);
            const double cond = (smin > 0.0) ? smax / smin
                                             : std::numeric_limits<double>::infinity();
            sys.cond_max = std::max(sys.cond_max, cond);
            if (!(smax > 0.0) || cond > cond_limit) {
                sys.active[i] = false;
                sys.patterns[i] = SpectralField(engine.grid());
                continue;
            }
            // LU keeps exact zeros for block-decoupled (disjoint-band) systems.
            const Eigen::VectorXd x = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(rhs);
            for (int c = 0; c < nsys; ++c) sys.coeff[i][others[c]] = x(c);
        }

        SpectralField p = basis[i];
        for (int j = 0; j < d; ++j) {
            if (j == i || sys.coeff[i][j] == 0.0) continue;
            const double cij = sys.coeff[i][j];
            for (std::size_t m : engine.mask(j).support) p.c[m] += cij * basis[j].c[m];
        }
        sys.patterns[i] = std::move(p);

        double diag = 0.0;
        for (int j = 0; j < d; ++j) diag += sys.coeff[i][j] * sys.gram_at(i, j);
        sys.diag[i] = diag;

        double pn = 0.0;
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                pn += sys.coeff[i][j] * sys.coeff[i][k] * tdot[std::size_t(j) * d + k];
        sys.pattern_norm[i] = std::sqrt(std::max(0.0, pn));
    }
    return sys;
}

/// τ_i = -ΔQ_i / (V_i, R_i P_i); Eq.-level orientation where the reduced term
/// is subtracted from the tendency.
inline TauVector compute_taus(const DeltaQRecord& dq, const PatternSystem& sys) {
    if (int(dq.dq.size()) != sys.d) throw ConfigError("compute_taus: dimension mismatch");
    TauVector out;
    out.t_days = dq.t_days;
    out.taus.assign(sys.d, 0.0);
    for (int i = 0; i < sys.d; ++i) {
        const double scale = sys.basis_norm[i] * sys.pattern_norm[i];
        if (!sys.active[i] || std::abs(sys.diag[i]) <= 1e-14 * scale)
            throw SolverError("compute_taus: degenerate denominator for QoI " +
                              std::to_string(i));
        out.taus[i] = -dq.dq[i] / sys.diag[i];
    }
    return out;
}

/// r̃ = Σ_j τ_j P_j.
inline SpectralField reduced_sgs_term(const TauVector& taus, const PatternSystem& sys) {
    if (int(taus.taus.size()) != sys.d) throw ConfigError("reduced_sgs_term: dimension mismatch");
    SpectralField r(*sys.patterns.at(0).grid);
    for (int j = 0; j < sys.d; ++j) {
        if (taus.taus[j] == 0.0) continue;
        const double t = taus.taus[j];
        for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] += t * sys.patterns[j].c[i];
    }
    return r;
}

struct CorrectorDiag {
    double orthogonality_residual = 0.0;
    double cond_max = 0.0;
    int dropped_patterns = 0;
    std::vector<double> cos_theta;  // |cosθ| between R ψ̄ and R ω̄ per QoI band
    std::vector<double> qoi_predicted;
    std::vector<double> qoi_corrected;
};

namespace detail {

// One nudging pass: ω̄ += Σ_j [ΔQ_j/(V_j,R_jP_j)] P_j with patterns built at
// the given state. Returns the number of dropped (degenerate) patterns.
inline int corrector_pass(FlowState& state, const std::vector<double>& dq,
                          const QoiEngine& engine, PatternSystem* sys_out = nullptr) {
    const std::vector<SpectralField> basis = engine.basis(state);
    PatternSystem sys = solve_pattern_coefficients(basis, engine);
    int dropped = 0;
    bool touched = false;
    for (int j = 0; j < sys.d; ++j) {
        const double scale = sys.basis_norm[j] * sys.pattern_norm[j];
        if (!sys.active[j] || std::abs(sys.diag[j]) <= 1e-14 * scale) {
            ++dropped;
            continue;
        }
        const double amp = dq[j] / sys.diag[j];
        if (amp == 0.0) continue;
        touched = true;
        for (std::size_t i = 0; i < state.w_hat.c.size(); ++i)
            state.w_hat.c[i] += amp * sys.patterns[j].c[i];
    }
    if (touched) state.psi_hat = inverse_laplacian(state.w_hat);
    if (sys_out) *sys_out = std::move(sys);
    return dropped;
}

}  // namespace detail

/// Post-step nudging: ω̄ⁿ⁺¹ = ω̄ⁿ⁺¹* + Σ_j [ΔQ_j/(V_j,R_jP_j)] P_j, which raises
/// each QoI by ΔQ_j up to the Appendix-style quadratic remainder; a second
/// pass against the same targets removes that remainder, making the per-step
/// nudge exact to roundoff levels. Degenerate patterns are dropped for the
/// step (their ΔQ stays unapplied) and counted.
inline FlowState corrector_step(const FlowState& predicted, const DeltaQRecord& dq,
                                const QoiEngine& engine, CorrectorDiag* diag = nullptr,
                                int passes = 2) {
    if (int(dq.dq.size()) != engine.d()) throw ConfigError("corrector_step: dimension mismatch");
    const QoiVector q_pred = engine.evaluate(predicted);
    std::vector<double> target(engine.d());
    for (int i = 0; i < engine.d(); ++i) target[i] = q_pred.values[i] + dq.dq[i];

    FlowState corrected;
    corrected.t = predicted.t;
    corrected.w_hat = predicted.w_hat;
    corrected.psi_hat = predicted.psi_hat;

    PatternSystem first_sys;
    int dropped = 0;
    std::vector<double> residual = dq.dq;
    for (int pass = 0; pass < passes; ++pass) {
        const int d = detail::corrector_pass(corrected, residual, engine,
                                             pass == 0 ? &first_sys : nullptr);
        if (pass == 0) dropped = d;
        if (pass + 1 < passes) {
            const QoiVector q_now = engine.evaluate(corrected);
            for (int i = 0; i < engine.d(); ++i) residual[i] = target[i] - q_now.values[i];
        }
    }

    if (diag) {
        diag->orthogonality_residual = first_sys.orthogonality_residual();
        diag->cond_max = first_sys.cond_max;
        diag->dropped_patterns = dropped;
        diag->cos_theta.assign(engine.d(), 0.0);
        for (int i = 0; i < engine.d(); ++i) {
            const auto& m = engine.mask(i);
            const double sp = filtered_inner_product(m, predicted.psi_hat, predicted.w_hat);
            const double ss = filtered_inner_product(m, predicted.psi_hat, predicted.psi_hat);
            const double ww = filtered_inner_product(m, predicted.w_hat, predicted.w_hat);
            diag->cos_theta[i] =
                (ss > 0.0 && ww > 0.0) ? std::abs(sp) / std::sqrt(ss * ww) : 0.0;
        }
        diag->qoi_predicted = q_pred.values;
        diag->qoi_corrected = engine.evaluate(corrected).values;
    }
    return corrected;
}

/// Closed-form reduced SGS term for the paper's two-disjoint-band, d = 4
/// configuration (energy+enstrophy per band); independent oracle for the
/// linear-system path, same orientation as reduced_sgs_term.
inline SpectralField analytic_reduced_term(const FlowState& state, const DeltaQRecord& dq,
                                           const QoiEngine& engine) {
    const auto& specs = engine.specs();
    if (engine.d() != 4 || specs[0].kind != QoiKind::Energy ||
        specs[1].kind != QoiKind::Enstrophy || specs[2].kind != QoiKind::Energy ||
        specs[3].kind != QoiKind::Enstrophy || specs[0].lo != specs[1].lo ||
        specs[0].hi != specs[1].hi || specs[2].lo != specs[3].lo || specs[2].hi != specs[3].hi ||
        specs[1].hi >= specs[2].lo)
        throw ConfigError("analytic_reduced_term: requires E,Z over two disjoint bands");

    SpectralField r(engine.grid());
    for (int band = 0; band < 2; ++band) {
        const int ie = 2 * band, iz = 2 * band + 1;
        const auto& mask = engine.mask(ie);
        const SpectralField psi_b = apply_filter(mask, state.psi_hat);
        const SpectralField w_b = apply_filter(mask, state.w_hat);
        const double E = -0.5 * detail::masked_dot(mask, psi_b, w_b);
        const double Z = 0.5 * detail::masked_dot(mask, w_b, w_b);
        const double S = 0.5 * detail::masked_dot(mask, psi_b, psi_b);
        const double denom = 2.0 * S * Z - 2.0 * E * E;
        if (!(denom > 0.0))
            throw SolverError("analytic_reduced_term: degenerate band (2SZ - 2E² <= 0)");
        const double ae = dq.dq[ie] * Z / denom;
        const double az = -dq.dq[iz] * S / denom;
        // ae (ψ_b + (E/Z) ω_b) + az (ω_b + (E/S) ψ_b)
        for (std::size_t i : mask.support)
            r.c[i] += (ae + az * E / S) * psi_b.c[i] + (ae * E / Z + az) * w_b.c[i];
    }
    return r;
}

enum class BoundKind { Energy, Enstrophy };

struct TrackStepRecord {
    double t_days = 0.0;
    std::vector<double> dq;
    std::vector<double> q_ref;
    std::vector<double> q_corrected;
    std::vector<double> eps;           // (Q_corrected - Q_ref)/Q_ref
    std::vector<double> bound;         // per-QoI bound at the exact per-band angle
    std::vector<double> bound_factor;  // Z*/(Z*+ΔQ_z) resp. E*/(E*+ΔQ_e)
    std::vector<double> cos_theta;
    double orthogonality_residual = 0.0;
    double cond_max = 0.0;
    int dropped = 0;
};

struct TrackResult {
    DeltaQDataset dataset;
    std::vector<TrackStepRecord> steps;
    FlowState final_state;
    double max_orthogonality_residual = 0.0;
};

/// Appendix-style per-step bound on the relative QoI error after correction.
/// dq_e/dq_z are the band's energy/enstrophy corrections; s/z/e the predicted
/// S*, Z*, E*; c the generalized-angle bound in [0,1); k_min the band's
/// smallest wavenumber magnitude (energy kind only).
inline double tracking_error_bound(double dq_e, double dq_z, double s, double z, double e,
                                   double c, BoundKind kind, double k_min = 1.0) {
    if (!(c >= 0.0 && c < 1.0)) throw ConfigError("tracking_error_bound: need 0 <= c < 1");
    if (!(s > 0.0) || !(z > 0.0)) throw ConfigError("tracking_error_bound: need S, Z > 0");
    auto term = [](double num, double den) {
        return num == 0.0 ? 0.0 : std::abs(num / den);
    };
    const double common = term(dq_e * dq_e, z * s) + term(dq_z * dq_z, z * z) +
                          2.0 * term(dq_e * dq_z, z * e);
    if (kind == BoundKind::Enstrophy) return common / (4.0 * (1.0 - c * c));
    const double f_bound = s / (k_min * k_min);
    const double extra = term(dq_e * dq_e * f_bound, e * s * s) +
                         term(dq_z * dq_z * f_bound, z * e * s) +
                         2.0 * term(dq_e * dq_z * f_bound, z * s * s);
    return (common + extra) / (4.0 * (1.0 - c * c) * (1.0 - c * c));
}

namespace detail {

// Per-QoI bound records for one corrected step. Bands are assumed paired
// (E,Z) as in default_qois; for other layouts the bound entries stay empty.
inline void fill_bounds(const QoiEngine& engine, const FlowState& predicted,
                        const DeltaQRecord& dq, TrackStepRecord& rec) {
    const auto& specs = engine.specs();
    const int d = engine.d();
    rec.bound.assign(d, std::numeric_limits<double>::quiet_NaN());
    rec.bound_factor.assign(d, 1.0);
    for (int ie = 0; ie < d; ++ie) {
        if (specs[ie].kind != QoiKind::Energy) continue;
        for (int iz = 0; iz < d; ++iz) {
            if (specs[iz].kind != QoiKind::Enstrophy || specs[iz].lo != specs[ie].lo ||
                specs[iz].hi != specs[ie].hi)
                continue;
            const auto& m = engine.mask(ie);
            const double e = -0.5 * filtered_inner_product(m, predicted.psi_hat, predicted.w_hat);
            const double z = 0.5 * filtered_inner_product(m, predicted.w_hat, predicted.w_hat);
            const double s = 0.5 * filtered_inner_product(m, predicted.psi_hat, predicted.psi_hat);
            if (!(s > 0.0) || !(z > 0.0)) continue;
            const double c = std::min(std::abs(e) / std::sqrt(s * z),
                                      std::nextafter(1.0, 0.0));
            const double kmin = std::max(1, specs[ie].lo);
            rec.bound[ie] =
                tracking_error_bound(dq.dq[ie], dq.dq[iz], s, z, e, c, BoundKind::Energy, kmin);
            rec.bound[iz] =
                tracking_error_bound(dq.dq[ie], dq.dq[iz], s, z, e, c, BoundKind::Enstrophy);
            // The printed bounds replace (E*+ΔQ_e) and (Z*+ΔQ_z) denominators
            // by E*, Z*; these factors restore the provable inequality.
            if (e + dq.dq[ie] > 0.0) rec.bound_factor[ie] = e / (e + dq.dq[ie]);
            if (z + dq.dq[iz] > 0.0) rec.bound_factor[iz] = z / (z + dq.dq[iz]);
        }
    }
}

}  // namespace detail

/// Nudged training run: per LF step, a plain predictor step, ΔQ measured
/// against the reference QoI row for that step, then the corrector. Reference
/// rows must cover the horizon at LF-step cadence; a gap aborts.
inline TrackResult track_reference(const SolverConfig& lf, FlowState start,
                                   const QoiEngine& engine,
                                   const std::vector<QoiVector>& reference, double horizon_days,
                                   bool keep_step_diagnostics = true,
                                   double burn_in_days = 200.0) {
    lf.validate();
    const long steps = std::lround(horizon_days / lf.dt_days);
    if (long(reference.size()) < steps)
        throw ConfigError("track_reference: reference trajectory shorter than horizon (" +
                          std::to_string(reference.size()) + " rows, need " +
                          std::to_string(steps) + ")");
    TrackResult result;
    result.dataset.d = engine.d();
    result.dataset.burn_in_days = burn_in_days;

    FlowState state = std::move(start);
    const double t0 = state.t;
    for (long n = 0; n < steps; ++n) {
        const double t_days = time_to_days(t0) + (n + 1) * lf.dt_days;
        const QoiVector& ref = reference[std::size_t(n)];
        if (std::abs(ref.t_days - t_days) > 1e-6 * lf.dt_days)
            throw ConfigError("track_reference: reference gap at step " + std::to_string(n + 1) +
                              " (expected t = " + std::to_string(t_days) + " days, file has " +
                              std::to_string(ref.t_days) + ")");

        FlowState predicted = rk4_step(state, lf);
        predicted.t = t0 + (n + 1) * lf.dt();

        DeltaQRecord dq;
        dq.t_days = t_days;
        dq.dq.resize(engine.d());
        const QoiVector q_pred = engine.evaluate(predicted);
        for (int i = 0; i < engine.d(); ++i) dq.dq[i] = ref.values[i] - q_pred.values[i];

        CorrectorDiag cd;
        state = corrector_step(predicted, dq, engine, &cd);
        result.max_orthogonality_residual =
            std::max(result.max_orthogonality_residual, cd.orthogonality_residual);
        result.dataset.append(dq);

        if (keep_step_diagnostics) {
            TrackStepRecord rec;
            rec.t_days = t_days;
            rec.dq = dq.dq;
            rec.q_ref = ref.values;
            rec.q_corrected = cd.qoi_corrected;
            rec.eps.resize(engine.d());
            for (int i = 0; i < engine.d(); ++i)
                rec.eps[i] = ref.values[i] != 0.0
                                 ? (cd.qoi_corrected[i] - ref.values[i]) / ref.values[i]
                                 : cd.qoi_corrected[i] - ref.values[i];
            rec.cos_theta = cd.cos_theta;
            rec.orthogonality_residual = cd.orthogonality_residual;
            rec.cond_max = cd.cond_max;
            rec.dropped = cd.dropped_patterns;
            detail::fill_bounds(engine, predicted, dq, rec);
            result.steps.push_back(std::move(rec));
        }
    }
    result.final_state = std::move(state);
    return result;
}

}  // namespace vort2d
