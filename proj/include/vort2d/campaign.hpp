#pragma once

#include <chrono>
#include <iostream>

#include "vort2d/manifest.hpp"
#include "vort2d/snapshot.hpp"
#include "vort2d/stats.hpp"

namespace vort2d {

namespace fs = std::filesystem;

struct CampaignPaths {
    fs::path root;
    fs::path hf_dir, train_dir, pred_dir, analysis_dir;

    explicit CampaignPaths(fs::path r) : root(std::move(r)) {
        hf_dir = root / "hf";
        train_dir = root / "train";
        pred_dir = root / "pred";
        analysis_dir = root / "analysis";
    }
    fs::path seed_dir(std::uint64_t seed) const {
        return pred_dir / ("seed_" + std::to_string(seed));
    }
};

namespace detail {

inline bool phase_done(const fs::path& dir) { return fs::exists(dir / ".done"); }
inline void mark_done(const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream out(dir / ".done");
    out << "ok\n";
}

inline std::vector<std::string> qoi_header(const std::vector<QoiSpec>& specs) {
    std::vector<std::string> h{"t_days"};
    for (std::size_t i = 0; i < specs.size(); ++i) h.push_back("q" + std::to_string(i + 1));
    return h;
}

inline std::vector<std::string> dq_header(int d) {
    std::vector<std::string> h{"t_days"};
    for (int i = 0; i < d; ++i) h.push_back("dq" + std::to_string(i + 1));
    return h;
}

inline std::vector<QoiVector> load_qoi_csv(const fs::path& path, int d) {
    const CsvTable table = read_csv(path);
    if (int(table.header.size()) != d + 1) throw IoError("unexpected column count in " + path.string());
    std::vector<QoiVector> rows;
    rows.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        QoiVector q;
        q.t_days = r[0];
        q.values.assign(r.begin() + 1, r.end());
        rows.push_back(std::move(q));
    }
    return rows;
}

inline fs::path corr_snapshot_path(const fs::path& hf_dir, long index) {
    char name[32];
    std::snprintf(name, sizeof(name), "snap_%06ld.bin", index);
    return hf_dir / "snaps" / name;
}

}  // namespace detail

inline void write_mvg_csv(const MvgModel& m, const fs::path& path) {
    std::vector<std::string> header;
    for (int i = 0; i < m.d; ++i) header.push_back("c" + std::to_string(i + 1));
    std::vector<std::vector<double>> rows;
    rows.push_back(m.mean);
    for (int i = 0; i < m.d; ++i)
        rows.emplace_back(m.cov.begin() + std::size_t(i) * m.d,
                          m.cov.begin() + std::size_t(i + 1) * m.d);
    write_csv_atomic(path, header, rows);
}

inline MvgModel read_mvg_csv(const fs::path& path) {
    const CsvTable table = read_csv(path);
    const int d = int(table.header.size());
    if (int(table.rows.size()) != d + 1) throw IoError("mvg csv must hold mean + d rows: " + path.string());
    MvgModel m;
    m.d = d;
    m.mean = table.rows[0];
    m.cov.resize(std::size_t(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m.cov[std::size_t(i) * d + j] = table.rows[i + 1][j];
    refactor(m);
    return m;
}

inline DeltaQDataset read_dq_csv(const fs::path& path, double burn_in_days) {
    const CsvTable table = read_csv(path);
    DeltaQDataset data;
    data.d = int(table.header.size()) - 1;
    data.burn_in_days = burn_in_days;
    for (const auto& r : table.rows) {
        DeltaQRecord rec;
        rec.t_days = r[0];
        rec.dq.assign(r.begin() + 1, r.end());
        data.append(std::move(rec));
    }
    return data;
}

/// HF reference phase: spin-up, then the reference run recording QoIs at
/// LF-step cadence (for tracking), QoIs and spectra at stats cadence, the
/// coarse-grained initial state for LF experiments, and coarse-grained
/// snapshots for decorrelation.
inline void run_hf_reference(const RunManifest& m, const CampaignPaths& paths,
                             std::ostream& log = std::cout) {
    if (detail::phase_done(paths.hf_dir)) {
        log << "[hf] up to date\n";
        return;
    }
    log << "[hf] spin-up " << m.spinup_days << " days + reference " << m.reference_days
        << " days (n = " << m.hf_n << ")\n";
    const SolverConfig hf = m.hf_config();
    const auto& lf_grid = grid_of(m.lf_n);

    FlowState state = run_spinup(hf, m.spinup_days);

    QoiEngine engine(*hf.grid, m.qois, lf_grid.max_wavenumber());
    const long per_lf = std::lround(m.lf_dt_days / m.hf_dt_days);
    const long per_stat = std::lround(m.stats_cadence_days / m.hf_dt_days);
    const long per_snap = std::lround(m.snapshot_cadence_days / m.hf_dt_days);

    std::vector<std::vector<double>> ref_rows, daily_rows;
    SpectrumSeries spectrum;
    fs::create_directories(paths.hf_dir / "snaps");

    // LF initial state: coarse-grained spun-up field at t = 0.
    {
        const SpectralField w_lf = coarse_grain(state.w_hat, lf_grid);
        write_snapshot(to_physical(w_lf), 0.0, paths.hf_dir / "lf_ic.snap");
    }

    SimHooks hooks;
    hooks.after_step = [&](FlowState& s, long step) {
        if (step % per_lf == 0) {
            const QoiVector q = engine.evaluate(s);
            std::vector<double> row{q.t_days};
            row.insert(row.end(), q.values.begin(), q.values.end());
            ref_rows.push_back(std::move(row));
        }
        if (step % per_stat == 0) {
            const QoiVector q = engine.evaluate(s);
            std::vector<double> row{q.t_days};
            row.insert(row.end(), q.values.begin(), q.values.end());
            daily_rows.push_back(std::move(row));
            FlowState coarse;
            coarse.t = s.t;
            coarse.w_hat = coarse_grain(s.w_hat, lf_grid);
            coarse.psi_hat = inverse_laplacian(coarse.w_hat);
            spectrum.add(coarse);
        }
        if (step % per_snap == 0) {
            const SpectralField w_lf = coarse_grain(s.w_hat, lf_grid);
            write_snapshot(to_physical(w_lf), s.t_days(),
                           detail::corr_snapshot_path(paths.hf_dir, step / per_snap));
        }
    };
    state = simulate(hf, m.reference_days, hooks, state);

    write_csv_atomic(paths.hf_dir / "qoi_ref.csv", detail::qoi_header(m.qois), ref_rows);
    write_csv_atomic(paths.hf_dir / "qoi_daily.csv", detail::qoi_header(m.qois), daily_rows);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t l = 0; l < spectrum.energy.size(); ++l)
            rows.push_back({double(l), spectrum.energy[l]});
        write_csv_atomic(paths.hf_dir / "spectrum.csv", {"shell", "energy"}, rows);
    }
    write_snapshot(to_physical(state.w_hat), state.t_days(), paths.hf_dir / "final.snap");
    detail::mark_done(paths.hf_dir);
    log << "[hf] done\n";
}

/// Training phase: nudged LF run against the HF reference QoIs, ΔQ dataset,
/// per-step diagnostics, and the fitted MVG model.
inline void run_training(const RunManifest& m, const CampaignPaths& paths,
                         std::ostream& log = std::cout) {
    if (detail::phase_done(paths.train_dir)) {
        log << "[train] up to date\n";
        return;
    }
    if (!detail::phase_done(paths.hf_dir))
        throw ConfigError("training phase requires a completed hf phase");
    log << "[train] tracking " << m.training_days << " days\n";

    const SolverConfig lf = m.lf_config();
    const QoiEngine engine(*lf.grid, m.qois);
    const Snapshot ic = read_snapshot(paths.hf_dir / "lf_ic.snap");
    FlowState start;
    start.t = days_to_time(ic.t_days);
    start.w_hat = to_spectral(ic.w);
    start.psi_hat = inverse_laplacian(start.w_hat);

    const auto reference = detail::load_qoi_csv(paths.hf_dir / "qoi_ref.csv", engine.d());
    if (m.training_days > m.reference_days + 1e-9)
        throw ConfigError("training.days exceeds reference.days");
    const TrackResult result = track_reference(lf, std::move(start), engine, reference,
                                               m.training_days, true, m.burn_in_days);

    std::vector<std::vector<double>> dq_rows;
    for (const auto& rec : result.dataset.records) {
        std::vector<double> row{rec.t_days};
        row.insert(row.end(), rec.dq.begin(), rec.dq.end());
        dq_rows.push_back(std::move(row));
    }
    write_csv_atomic(paths.train_dir / "dq.csv", detail::dq_header(engine.d()), dq_rows);

    std::vector<std::string> diag_header{"t_days", "orthogonality_residual", "cond", "dropped"};
    for (int i = 0; i < engine.d(); ++i) diag_header.push_back("eps" + std::to_string(i + 1));
    for (int i = 0; i < engine.d(); ++i) diag_header.push_back("bound" + std::to_string(i + 1));
    for (int i = 0; i < engine.d(); ++i) diag_header.push_back("cos" + std::to_string(i + 1));
    std::vector<std::vector<double>> diag_rows;
    for (const auto& s : result.steps) {
        std::vector<double> row{s.t_days, s.orthogonality_residual, s.cond_max, double(s.dropped)};
        row.insert(row.end(), s.eps.begin(), s.eps.end());
        row.insert(row.end(), s.bound.begin(), s.bound.end());
        row.insert(row.end(), s.cos_theta.begin(), s.cos_theta.end());
        diag_rows.push_back(std::move(row));
    }
    write_csv_atomic(paths.train_dir / "track_diag.csv", diag_header, diag_rows);

    write_mvg_csv(fit_mvg(result.dataset), paths.train_dir / "mvg.csv");
    detail::mark_done(paths.train_dir);
    log << "[train] done (max orthogonality residual "
        << fmt17(result.max_orthogonality_residual) << ")\n";
}

/// One predictive LF run; returns the per-stat-step QoI rows and writes the
/// run directory (QoIs, correlation against HF snapshots, averaged spectrum).
inline void run_prediction(const RunManifest& m, const CampaignPaths& paths, std::uint64_t seed,
                           std::ostream& log = std::cout) {
    const fs::path dir = paths.seed_dir(seed);
    if (detail::phase_done(dir)) {
        log << "[pred " << seed << "] up to date\n";
        return;
    }
    if (!detail::phase_done(paths.hf_dir))
        throw ConfigError("prediction phase requires a completed hf phase");
    const bool needs_training = m.closure == ClosureChoice::ToPlain ||
                                m.closure == ClosureChoice::ToIndependent ||
                                m.closure == ClosureChoice::ToMvg;
    if (needs_training && !detail::phase_done(paths.train_dir))
        throw ConfigError("closure '" + closure_name(m.closure) + "' requires a completed train phase");
    log << "[pred " << seed << "] " << closure_name(m.closure) << " for " << m.prediction_days
        << " days\n";

    const SolverConfig lf = m.lf_config(m.closure == ClosureChoice::Smagorinsky);
    const QoiEngine engine(*lf.grid, m.qois);

    std::unique_ptr<DeltaQSampler> sampler;
    if (needs_training) {
        if (m.closure == ClosureChoice::ToMvg) {
            sampler = std::make_unique<DeltaQSampler>(read_mvg_csv(paths.train_dir / "mvg.csv"),
                                                      seed);
        } else {
            const DeltaQDataset data = read_dq_csv(paths.train_dir / "dq.csv", m.burn_in_days);
            sampler = std::make_unique<DeltaQSampler>(m.closure == ClosureChoice::ToPlain
                                                          ? SampleMode::Plain
                                                          : SampleMode::Independent,
                                                      data, seed);
        }
    }

    const Snapshot ic = read_snapshot(paths.hf_dir / "lf_ic.snap");
    FlowState start;
    start.t = days_to_time(ic.t_days);
    start.w_hat = to_spectral(ic.w);
    start.psi_hat = inverse_laplacian(start.w_hat);

    const long per_stat = std::lround(m.stats_cadence_days / m.lf_dt_days);
    const long per_snap = std::lround(m.snapshot_cadence_days / m.lf_dt_days);
    std::vector<std::vector<double>> qoi_rows, corr_rows;
    SpectrumSeries spectrum;

    PredictiveHooks hooks;
    hooks.on_step = [&](const FlowState& s, long step) {
        if (step % per_stat == 0) {
            const QoiVector q = engine.evaluate(s);
            std::vector<double> row{q.t_days};
            row.insert(row.end(), q.values.begin(), q.values.end());
            qoi_rows.push_back(std::move(row));
            spectrum.add(s);
        }
        if (step % per_snap == 0) {
            const fs::path ref = detail::corr_snapshot_path(paths.hf_dir, step / per_snap);
            if (fs::exists(ref)) {
                const Snapshot hf_snap = read_snapshot(ref);
                corr_rows.push_back(
                    {s.t_days(), field_correlation(to_physical(s.w_hat), hf_snap.w)});
            }
        }
    };
    predictive_run(lf, std::move(start), engine, sampler.get(), m.prediction_days, hooks);

    write_csv_atomic(dir / "qoi.csv", detail::qoi_header(m.qois), qoi_rows);
    write_csv_atomic(dir / "correlation.csv", {"t_days", "correlation"}, corr_rows);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t l = 0; l < spectrum.energy.size(); ++l)
            rows.push_back({double(l), spectrum.energy[l]});
        write_csv_atomic(dir / "spectrum.csv", {"shell", "energy"}, rows);
    }
    detail::mark_done(dir);
    log << "[pred " << seed << "] done\n";
}

/// KS tables, convergence diagnostics, envelopes and the summed-KS summary
/// for every completed prediction run.
inline void run_analysis(const RunManifest& m, const CampaignPaths& paths,
                         std::ostream& log = std::cout) {
    if (detail::phase_done(paths.analysis_dir)) {
        log << "[analysis] up to date\n";
        return;
    }
    if (!detail::phase_done(paths.hf_dir))
        throw ConfigError("analysis phase requires a completed hf phase");
    log << "[analysis] begin\n";
    const int d = int(m.qois.size());
    const auto hf_daily = detail::load_qoi_csv(paths.hf_dir / "qoi_daily.csv", d);

    std::vector<std::vector<double>> hf_window(d);
    for (const auto& q : hf_daily)
        if (q.t_days > m.burn_in_days)
            for (int i = 0; i < d; ++i) hf_window[i].push_back(q.values[i]);

    std::vector<std::vector<double>> ks_rows, summary_rows;
    std::vector<std::vector<double>> ks_per_run;
    std::vector<std::uint64_t> run_seeds;
    for (const auto seed : m.replica_seeds) {
        const fs::path dir = paths.seed_dir(seed);
        if (!detail::phase_done(dir)) continue;
        const auto rows = detail::load_qoi_csv(dir / "qoi.csv", d);
        std::vector<double> t_days;
        std::vector<std::vector<double>> series(d);
        std::vector<std::vector<double>> window(d);
        for (const auto& q : rows) {
            t_days.push_back(q.t_days);
            for (int i = 0; i < d; ++i) {
                series[i].push_back(q.values[i]);
                if (q.t_days > m.burn_in_days) window[i].push_back(q.values[i]);
            }
        }
        std::vector<double> ks(d);
        double summed = 0.0;
        for (int i = 0; i < d; ++i) {
            ks[i] = ks_distance(window[i], hf_window[i]);
            summed += ks[i];
            ks_rows.push_back({double(seed), double(i + 1), ks[i]});
        }
        summary_rows.push_back({double(seed), summed});
        ks_per_run.push_back(ks);
        run_seeds.push_back(seed);

        // growing-window convergence per QoI
        const double step_days = std::max(m.stats_cadence_days, m.prediction_days / 50.0);
        std::vector<std::vector<double>> conv_rows;
        for (int i = 0; i < d; ++i) {
            const auto conv = convergence_diagnostics(t_days, series[i], hf_window[i], step_days);
            for (const auto& row : conv)
                conv_rows.push_back({double(i + 1), row.window_days, row.ks, row.cum_mean,
                                     row.cum_std, row.rel_mean_err, row.rel_std_err});
        }
        write_csv_atomic(paths.analysis_dir / ("convergence_seed_" + std::to_string(seed) + ".csv"),
                         {"qoi", "window_days", "ks", "cum_mean", "cum_std", "rel_mean_err",
                          "rel_std_err"},
                         conv_rows);
    }
    if (run_seeds.empty()) throw ConfigError("analysis: no completed prediction runs");

    const ReplicaEnvelope env = replica_envelope(ks_per_run);
    for (auto& row : summary_rows)
        row.push_back(std::uint64_t(row[0]) == run_seeds[env.best] ? 1.0 : 0.0);
    write_csv_atomic(paths.analysis_dir / "ks.csv", {"seed", "qoi", "ks"}, ks_rows);
    write_csv_atomic(paths.analysis_dir / "summary.csv", {"seed", "summed_ks", "best"},
                     summary_rows);
    {
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < d; ++i) rows.push_back({double(i + 1), env.lo[i], env.hi[i]});
        write_csv_atomic(paths.analysis_dir / "ks_envelope.csv", {"qoi", "ks_min", "ks_max"},
                         rows);
    }

    // correlation envelope across runs
    {
        std::vector<std::vector<double>> per_run;
        std::vector<double> times;
        for (std::size_t r = 0; r < run_seeds.size(); ++r) {
            const CsvTable t = read_csv(paths.seed_dir(run_seeds[r]) / "correlation.csv");
            std::vector<double> vals;
            for (const auto& row : t.rows) {
                if (r == 0) times.push_back(row[0]);
                vals.push_back(row[1]);
            }
            per_run.push_back(std::move(vals));
        }
        if (!times.empty()) {
            const ReplicaEnvelope cenv = replica_envelope(per_run);
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < times.size(); ++i)
                rows.push_back({times[i], cenv.lo[i], cenv.hi[i]});
            write_csv_atomic(paths.analysis_dir / "correlation_envelope.csv",
                             {"t_days", "corr_min", "corr_max"}, rows);
        }
    }
    detail::mark_done(paths.analysis_dir);
    log << "[analysis] done (best seed " << run_seeds[env.best] << ")\n";
}

/// Full pipeline: HF reference -> tracking + fit -> replica predictions ->
/// analysis. Completed phases are skipped, so re-running a finished campaign
/// is a no-op and deleting one phase directory redoes only that phase.
inline fs::path orchestrate_campaign(const RunManifest& m, std::ostream& log = std::cout) {
    m.validate();
    const CampaignPaths paths(m.output_dir);
    fs::create_directories(paths.root);
    write_manifest(m, paths.root / "manifest.resolved.cfg");
    try {
        run_hf_reference(m, paths, log);
    } catch (const std::exception& e) {
        throw SolverError("campaign phase 'hf' failed: " + std::string(e.what()));
    }
    const bool needs_training = m.closure == ClosureChoice::ToPlain ||
                                m.closure == ClosureChoice::ToIndependent ||
                                m.closure == ClosureChoice::ToMvg;
    if (needs_training) {
        try {
            run_training(m, paths, log);
        } catch (const std::exception& e) {
            throw SolverError("campaign phase 'train' failed: " + std::string(e.what()));
        }
    }
    for (const auto seed : m.replica_seeds) {
        try {
            run_prediction(m, paths, seed, log);
        } catch (const std::exception& e) {
            throw SolverError("campaign phase 'predict' (seed " + std::to_string(seed) +
                              ") failed: " + std::string(e.what()));
        }
    }
    try {
        run_analysis(m, paths, log);
    } catch (const std::exception& e) {
        throw SolverError("campaign phase 'analysis' failed: " + std::string(e.what()));
    }
    return paths.root;
}

struct BenchRow {
    std::string solver;
    double seconds_per_100_days = 0.0;
};

/// Wall-clock per 100 simulated days for the HF solver and the LF solver with
/// each closure, Table-3 style. Initialization excluded; no file output inside
/// the timed sections.
inline std::vector<BenchRow> run_bench(const RunManifest& m, double lf_days = 20.0,
                                       double hf_days = 2.0, std::ostream& log = std::cout) {
    using clk = std::chrono::steady_clock;
    std::vector<BenchRow> rows;
    const QoiEngine lf_engine(grid_of(m.lf_n), m.qois);

    // Stationary-amplitude LF start state; a short settle run keeps the
    // benchmark independent of the spin-up phase.
    const SolverConfig lf_plain = m.lf_config();
    FlowState lf0 = simulate(lf_plain, 5.0, {}, initial_vorticity(grid_of(m.lf_n), 0.05));

    auto time_run = [&](const char* name, auto&& body) {
        const auto t0 = clk::now();
        body();
        const double secs = std::chrono::duration<double>(clk::now() - t0).count();
        rows.push_back({name, 0.0});
        return secs;
    };

    {
        const SolverConfig hf = m.hf_config();
        FlowState s = rk4_step(initial_vorticity(*hf.grid), hf);  // warm plans
        const double secs = time_run("HF", [&] { simulate(hf, hf_days, {}, s); });
        rows.back().seconds_per_100_days = secs * 100.0 / hf_days;
    }
    {
        const double secs = time_run("No model", [&] { simulate(lf_plain, lf_days, {}, lf0); });
        rows.back().seconds_per_100_days = secs * 100.0 / lf_days;
    }
    {
        const SolverConfig lf_smag = m.lf_config(true);
        const double secs = time_run("Smag", [&] { simulate(lf_smag, lf_days, {}, lf0); });
        rows.back().seconds_per_100_days = secs * 100.0 / lf_days;
    }
    {
        // TO track needs reference rows on disk first (excluded from timing).
        std::vector<std::vector<double>> ref_rows;
        SimHooks hooks;
        hooks.after_step = [&](FlowState& s, long) {
            const QoiVector q = lf_engine.evaluate(s);
            std::vector<double> row{q.t_days};
            row.insert(row.end(), q.values.begin(), q.values.end());
            ref_rows.push_back(std::move(row));
        };
        simulate(lf_plain, lf_days, hooks, lf0);
        const fs::path tmp = fs::temp_directory_path() / "vort2d_bench_ref.csv";
        write_csv_atomic(tmp, detail::qoi_header(m.qois), ref_rows);
        const double secs = time_run("TO track", [&] {
            const auto reference = detail::load_qoi_csv(tmp, lf_engine.d());
            track_reference(lf_plain, lf0, lf_engine, reference, lf_days, false,
                            m.burn_in_days);
        });
        rows.back().seconds_per_100_days = secs * 100.0 / lf_days;
        fs::remove(tmp);
    }
    {
        MvgModel model;
        model.d = lf_engine.d();
        model.mean.assign(model.d, 0.0);
        model.cov.assign(std::size_t(model.d) * model.d, 0.0);
        for (int i = 0; i < model.d; ++i) model.cov[std::size_t(i) * model.d + i] = 1e-16;
        refactor(model);
        DeltaQSampler sampler(model, 0);
        const double secs = time_run("TO resample", [&] {
            predictive_run(lf_plain, lf0, lf_engine, &sampler, lf_days);
        });
        rows.back().seconds_per_100_days = secs * 100.0 / lf_days;
    }
    for (const auto& row : rows)
        log << row.solver << ": " << row.seconds_per_100_days << " s / 100 days\n";
    return rows;
}

}  // namespace vort2d
