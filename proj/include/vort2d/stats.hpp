#pragma once

#include <algorithm>
#include <numeric>

#include "vort2d/qoi.hpp"

namespace vort2d {

struct EmpiricalCdf {
    std::vector<double> sorted;

    explicit EmpiricalCdf(std::vector<double> samples) : sorted(std::move(samples)) {
        if (sorted.empty()) throw ConfigError("EmpiricalCdf: empty sample");
        std::sort(sorted.begin(), sorted.end());
    }
    double operator()(double x) const {
        return double(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) /
               double(sorted.size());
    }
};

/// Exact sup-distance between two empirical CDFs, evaluated by merging the
/// pooled sample points.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ConfigError("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = double(a.size()), nb = double(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() || j < b.size()) {
        const double x = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / na - double(j) / nb));
    }
    return d;
}

struct ConvergenceRow {
    double window_days = 0.0;
    double ks = 0.0;
    double cum_mean = 0.0;
    double cum_std = 0.0;
    double rel_mean_err = 0.0;
    double rel_std_err = 0.0;
};

/// KS and running moments of growing prefixes of (t, value) against a
/// reference sample, one row per `window_step_days`.
inline std::vector<ConvergenceRow> convergence_diagnostics(const std::vector<double>& t_days,
                                                           const std::vector<double>& values,
                                                           const std::vector<double>& reference,
                                                           double window_step_days) {
    if (reference.empty()) throw ConfigError("convergence_diagnostics: empty reference");
    if (t_days.size() != values.size())
        throw ConfigError("convergence_diagnostics: size mismatch");
    const double ref_mean =
        std::accumulate(reference.begin(), reference.end(), 0.0) / double(reference.size());
    double ref_var = 0.0;
    for (double v : reference) ref_var += (v - ref_mean) * (v - ref_mean);
    const double ref_std =
        reference.size() > 1 ? std::sqrt(ref_var / double(reference.size() - 1)) : 0.0;

    std::vector<ConvergenceRow> rows;
    if (t_days.empty()) return rows;
    const double t_max = t_days.back();
    std::size_t upto = 0;
    for (double w = window_step_days; w <= t_max + 1e-9; w += window_step_days) {
        while (upto < t_days.size() && t_days[upto] <= w + 1e-9) ++upto;
        if (upto == 0) continue;
        ConvergenceRow row;
        row.window_days = w;
        std::vector<double> prefix(values.begin(), values.begin() + upto);
        row.ks = ks_distance(prefix, reference);
        row.cum_mean = std::accumulate(prefix.begin(), prefix.end(), 0.0) / double(prefix.size());
        double var = 0.0;
        for (double v : prefix) var += (v - row.cum_mean) * (v - row.cum_mean);
        row.cum_std = prefix.size() > 1 ? std::sqrt(var / double(prefix.size() - 1)) : 0.0;
        row.rel_mean_err = ref_mean != 0.0 ? (row.cum_mean - ref_mean) / ref_mean : 0.0;
        row.rel_std_err = ref_std != 0.0 ? (row.cum_std - ref_std) / ref_std : 0.0;
        rows.push_back(row);
    }
    return rows;
}

/// Shell-binned energy spectrum; shell l holds the modes with
/// l - 1/2 ≤ ‖k‖₂ < l + 1/2, so shells partition the resolved modes.
inline std::vector<double> energy_spectrum(const FlowState& s) {
    const auto& g = *s.w_hat.grid;
    const int kmax = g.max_wavenumber();
    const int lmax = int(std::floor(std::sqrt(2.0) * kmax + 0.5));
    std::vector<double> e(std::size_t(lmax) + 1, 0.0);
    const double n2 = double(g.n()) * g.n();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const int shell = int(std::floor(std::sqrt(g.k_sq(i)) + 0.5));
        const Complex p = s.psi_hat.c[i] * std::conj(s.w_hat.c[i]);
        e[shell] += -0.5 * p.real() / (n2 * n2);
    }
    return e;
}

/// Running time average of spectra.
struct SpectrumSeries {
    std::vector<double> energy;
    long samples = 0;

    void add(const FlowState& s) {
        const auto e = energy_spectrum(s);
        if (energy.empty()) energy.assign(e.size(), 0.0);
        if (e.size() != energy.size()) throw ConfigError("SpectrumSeries: grid changed");
        for (std::size_t i = 0; i < e.size(); ++i)
            energy[i] += (e[i] - energy[i]) / double(samples + 1);
        ++samples;
    }
};

/// Pearson correlation over grid points.
inline double field_correlation(const PhysicalField& a, const PhysicalField& b) {
    if (a.grid != b.grid) throw SpectralError("field_correlation: grid mismatch");
    const std::size_t n = a.v.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a.v[i];
        mb += b.v[i];
    }
    ma /= double(n);
    mb /= double(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a.v[i] - ma, db = b.v[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw ConfigError("field_correlation: zero-variance field");
    return sab / std::sqrt(saa * sbb);
}

struct ReplicaEnvelope {
    std::vector<double> lo;
    std::vector<double> hi;
    std::size_t best = 0;  // argmin of summed metric; ties -> lowest index
};

/// Elementwise min/max over replicas plus the best run by summed metric.
inline ReplicaEnvelope replica_envelope(const std::vector<std::vector<double>>& per_replica) {
    if (per_replica.empty()) throw ConfigError("replica_envelope: no replicas");
    const std::size_t m = per_replica.front().size();
    ReplicaEnvelope env;
    env.lo.assign(m, std::numeric_limits<double>::infinity());
    env.hi.assign(m, -std::numeric_limits<double>::infinity());
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < per_replica.size(); ++r) {
        if (per_replica[r].size() != m) throw ConfigError("replica_envelope: ragged metrics");
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            env.lo[i] = std::min(env.lo[i], per_replica[r][i]);
            env.hi[i] = std::max(env.hi[i], per_replica[r][i]);
            sum += per_replica[r][i];
        }
        if (sum < best_sum) {
            best_sum = sum;
            env.best = r;
        }
    }
    return env;
}

/// Gaussian-kernel density estimate with Silverman's bandwidth; plotting aid
/// only, never an acceptance metric.
inline std::vector<std::pair<double, double>> kernel_density(const std::vector<double>& samples,
                                                             int points = 128) {
    if (samples.empty()) throw ConfigError("kernel_density: empty sample");
    const double n = double(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / std::max(1.0, n - 1.0));
    const double h = std::max(1e-300, 1.06 * sd * std::pow(n, -0.2));
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *mn - 3.0 * h, hi = *mx + 3.0 * h;
    std::vector<std::pair<double, double>> out;
    for (int i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * i / double(points - 1);
        double acc = 0.0;
        for (double v : samples) {
            const double u = (x - v) / h;
            acc += std::exp(-0.5 * u * u);
        }
        out.emplace_back(x, acc / (n * h * std::sqrt(kTwoPi)));
    }
    return out;
}

}  // namespace vort2d
