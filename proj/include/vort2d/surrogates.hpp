#pragma once

#include <Eigen/Dense>

#include "vort2d/rng.hpp"
#include "vort2d/tau_orthogonal.hpp"

namespace vort2d {

/// Multivariate Gaussian fitted to the joint ΔQ distribution.
struct MvgModel {
    int d = 0;
    std::vector<double> mean;
    std::vector<double> cov;     // d×d row-major, symmetric PSD
    std::vector<double> factor;  // L with L Lᵀ = cov (eigen factorization,
                                 // negative eigenvalues clipped at 0)

    double cov_at(int i, int j) const { return cov[std::size_t(i) * d + j]; }
};

inline void refactor(MvgModel& m) {
    Eigen::MatrixXd c(m.d, m.d);
    double scale = 0.0, trace = 0.0;
    for (int i = 0; i < m.d; ++i) {
        trace += m.cov_at(i, i);
        for (int j = 0; j < m.d; ++j) {
            c(i, j) = m.cov_at(i, j);
            scale = std::max(scale, std::abs(c(i, j)));
        }
    }
    for (int i = 0; i < m.d; ++i)
        for (int j = i + 1; j < m.d; ++j)
            if (std::abs(m.cov_at(i, j) - m.cov_at(j, i)) > 1e-12 * std::max(scale, 1e-300))
                throw ConfigError("MvgModel: covariance not symmetric");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.eigenvalues()(0) < -1e-12 * std::max(trace, 1e-300))
        throw ConfigError("MvgModel: covariance has a significantly negative eigenvalue");
    Eigen::MatrixXd l = es.eigenvectors();
    for (int j = 0; j < m.d; ++j) {
        const double lambda = std::max(0.0, es.eigenvalues()(j));
        l.col(j) *= std::sqrt(lambda);
    }
    m.factor.assign(std::size_t(m.d) * m.d, 0.0);
    for (int i = 0; i < m.d; ++i)
        for (int j = 0; j < m.d; ++j) m.factor[std::size_t(i) * m.d + j] = l(i, j);
}

/// Sample mean and unbiased (n-1) sample covariance over post-burn-in records.
inline MvgModel fit_mvg(const DeltaQDataset& data) {
    const auto idx = data.fit_indices();
    const int d = data.d;
    if (long(idx.size()) < d + 1)
        throw ConfigError("fit_mvg: need at least d+1 = " + std::to_string(d + 1) +
                          " post-burn-in records, have " + std::to_string(idx.size()));
    MvgModel m;
    m.d = d;
    m.mean.assign(d, 0.0);
    for (auto i : idx)
        for (int k = 0; k < d; ++k) m.mean[k] += data.records[i].dq[k];
    for (int k = 0; k < d; ++k) m.mean[k] /= double(idx.size());
    m.cov.assign(std::size_t(d) * d, 0.0);
    for (auto i : idx)
        for (int a = 0; a < d; ++a) {
            const double da = data.records[i].dq[a] - m.mean[a];
            for (int b = a; b < d; ++b)
                m.cov[std::size_t(a) * d + b] += da * (data.records[i].dq[b] - m.mean[b]);
        }
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            m.cov[std::size_t(a) * d + b] /= double(idx.size() - 1);
            m.cov[std::size_t(b) * d + a] = m.cov[std::size_t(a) * d + b];
        }
    refactor(m);
    return m;
}

enum class SampleMode { Plain, Independent, Mvg };

inline SampleMode sample_mode_from_name(const std::string& name) {
    if (name == "plain" || name == "to-plain") return SampleMode::Plain;
    if (name == "independent" || name == "to-indep") return SampleMode::Independent;
    if (name == "mvg" || name == "to-mvg") return SampleMode::Mvg;
    throw ConfigError("unknown surrogate '" + name + "'");
}

/// Draws ΔQ noise per LF step. Plain resampling keeps whole records (cross-QoI
/// correlation preserved); independent resampling picks a record per
/// component; MVG draws mean + L z.
class DeltaQSampler {
public:
    DeltaQSampler(SampleMode mode, const DeltaQDataset& data, std::uint64_t seed)
        : mode_(mode), rng_(seed) {
        d_ = data.d;
        if (mode_ == SampleMode::Mvg) {
            model_ = fit_mvg(data);
        } else {
            // Resample the post-burn-in window; datasets entirely inside the
            // burn-in fall back to the full record list.
            for (auto i : data.fit_indices()) pool_.push_back(data.records[i].dq);
            if (pool_.empty())
                for (const auto& r : data.records) pool_.push_back(r.dq);
            if (pool_.empty()) throw ConfigError("DeltaQSampler: empty dataset");
        }
    }

    DeltaQSampler(MvgModel model, std::uint64_t seed)
        : mode_(SampleMode::Mvg), rng_(seed), model_(std::move(model)) {
        d_ = model_.d;
    }

    int d() const { return d_; }

    std::vector<double> sample() {
        std::vector<double> out(d_, 0.0);
        switch (mode_) {
            case SampleMode::Plain: {
                const auto& rec = pool_[rng_.index(pool_.size())];
                out = rec;
                break;
            }
            case SampleMode::Independent: {
                for (int k = 0; k < d_; ++k) out[k] = pool_[rng_.index(pool_.size())][k];
                break;
            }
            case SampleMode::Mvg: {
                std::vector<double> z(d_);
                for (int k = 0; k < d_; ++k) z[k] = rng_.normal();
                for (int i = 0; i < d_; ++i) {
                    double acc = model_.mean[i];
                    for (int j = 0; j < d_; ++j)
                        acc += model_.factor[std::size_t(i) * d_ + j] * z[j];
                    out[i] = acc;
                }
                break;
            }
        }
        return out;
    }

private:
    SampleMode mode_;
    Rng rng_;
    int d_ = 0;
    std::vector<std::vector<double>> pool_;
    MvgModel model_;
};

struct PredictiveHooks {
    // Called after every LF step with the (possibly corrected) state.
    std::function<void(const FlowState&, long step)> on_step;
};

/// LF run with a stochastic ΔQ corrector applied once per step. A null
/// sampler reproduces the no-closure run bit-for-bit.
inline FlowState predictive_run(const SolverConfig& lf, FlowState start, const QoiEngine& engine,
                                DeltaQSampler* sampler, double horizon_days,
                                const PredictiveHooks& hooks = {}) {
    lf.validate();
    const long steps = std::lround(horizon_days / lf.dt_days);
    FlowState state = std::move(start);
    const double t0 = state.t;
    for (long n = 0; n < steps; ++n) {
        FlowState predicted = rk4_step(state, lf);
        predicted.t = t0 + (n + 1) * lf.dt();
        if (sampler) {
            DeltaQRecord dq;
            dq.t_days = time_to_days(predicted.t);
            dq.dq = sampler->sample();
            state = corrector_step(predicted, dq, engine);
        } else {
            state = std::move(predicted);
        }
        if (hooks.on_step) hooks.on_step(state, n + 1);
    }
    return state;
}

}  // namespace vort2d
