#pragma once

#include <CLI11.hpp>

#include "vort2d/campaign.hpp"

namespace vort2d {

namespace detail {

inline RunManifest manifest_from(const std::string& config_path) {
    if (config_path.empty()) {
        RunManifest m;
        m.validate();
        return m;
    }
    return parse_manifest(config_path);
}

inline FlowState resolve_start(const std::string& start_path, const WavenumberGrid& grid,
                               double spinup_days, const SolverConfig& cfg) {
    if (!start_path.empty()) {
        const Snapshot snap = read_snapshot(start_path);
        if (snap.w.n() != grid.n())
            throw ConfigError("start snapshot grid (" + std::to_string(snap.w.n()) +
                              ") does not match model grid (" + std::to_string(grid.n()) + ")");
        FlowState s;
        s.t = days_to_time(snap.t_days);
        s.w_hat = to_spectral(snap.w);
        s.psi_hat = inverse_laplacian(s.w_hat);
        return s;
    }
    return run_spinup(cfg, spinup_days);
}

// Shared stepping/recording used by `simulate` and `predict` so a no-op
// closure is bitwise identical between the two subcommands.
inline void run_and_record(const SolverConfig& cfg, FlowState start, const QoiEngine& engine,
                           DeltaQSampler* sampler, double horizon_days, const RunManifest& m,
                           const fs::path& outdir, bool write_snaps) {
    const long per_stat = std::lround(m.stats_cadence_days / cfg.dt_days);
    const long per_snap = std::lround(m.snapshot_cadence_days / cfg.dt_days);
    std::vector<std::vector<double>> qoi_rows;
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
        if (write_snaps && step % per_snap == 0) {
            char name[32];
            std::snprintf(name, sizeof(name), "snap_%06ld.bin", step / per_snap);
            write_snapshot(to_physical(s.w_hat), s.t_days(), outdir / "snaps" / name);
        }
    };
    const FlowState final_state =
        predictive_run(cfg, std::move(start), engine, sampler, horizon_days, hooks);
    write_csv_atomic(outdir / "qoi.csv", qoi_header(m.qois), qoi_rows);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t l = 0; l < spectrum.energy.size(); ++l)
            rows.push_back({double(l), spectrum.energy[l]});
        write_csv_atomic(outdir / "spectrum.csv", {"shell", "energy"}, rows);
    }
    write_snapshot(to_physical(final_state.w_hat), final_state.t_days(), outdir / "final.snap");
}

}  // namespace detail

/// Entry point behind the vort2d binary. Exit codes: 0 success, 1 usage,
/// 2 runtime failure.
inline int cli_dispatch(std::vector<std::string> args) {
    CLI::App app{"Pseudospectral 2D vorticity solver with reduced stochastic closures"};
    app.require_subcommand(1);

    std::string config_path, output_dir, start_path, reference_path, train_dir, closure_flag,
        model_flag = "lf";
    double horizon_days = -1.0, spinup_override = -1.0;
    std::vector<std::uint64_t> seeds;
    int replicas = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "manifest file (defaults when omitted)");
        cmd->add_option("--output", output_dir, "output directory override");
    };

    CLI::App* c_sim = app.add_subcommand("simulate", "run the HF or LF model, record QoIs");
    add_common(c_sim);
    c_sim->add_option("--model", model_flag, "hf or lf")->check(CLI::IsMember({"hf", "lf"}));
    c_sim->add_option("--closure", closure_flag, "none|smag (stage closure)");
    c_sim->add_option("--horizon-days", horizon_days, "simulated days");
    c_sim->add_option("--spinup-days", spinup_override, "spin-up before recording");
    c_sim->add_option("--start", start_path, "snapshot to start from (skips spin-up)");

    CLI::App* c_track = app.add_subcommand("track", "nudged LF run against a reference QoI CSV");
    add_common(c_track);
    c_track->add_option("--reference", reference_path, "reference QoI CSV (LF-step cadence)");
    c_track->add_option("--start", start_path, "LF start snapshot");
    c_track->add_option("--horizon-days", horizon_days, "tracked days");

    CLI::App* c_pred = app.add_subcommand("predict", "LF run with a chosen closure");
    add_common(c_pred);
    c_pred->add_option("--closure", closure_flag, "none|smag|to-plain|to-indep|to-mvg");
    c_pred->add_option("--seed", seeds, "replica seed (repeatable)");
    c_pred->add_option("--replicas", replicas, "use seeds 0..N-1");
    c_pred->add_option("--horizon-days", horizon_days, "predicted days");
    c_pred->add_option("--train-dir", train_dir, "directory with dq.csv / mvg.csv");
    c_pred->add_option("--start", start_path, "LF start snapshot");

    CLI::App* c_ana = app.add_subcommand("analyze", "KS tables, envelopes, convergence");
    add_common(c_ana);

    CLI::App* c_bench = app.add_subcommand("bench", "wall-clock per 100 simulated days");
    add_common(c_bench);

    CLI::App* c_camp = app.add_subcommand("campaign", "full pipeline per the manifest");
    add_common(c_camp);

    std::vector<const char*> argv;
    argv.push_back("vort2d");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        RunManifest m = detail::manifest_from(config_path);
        const fs::path campaign_root = m.output_dir;  // default artifact location
        if (!output_dir.empty()) m.output_dir = output_dir;
        if (horizon_days <= 0.0) {
            if (c_sim->parsed()) horizon_days = m.reference_days;
            if (c_track->parsed()) horizon_days = m.training_days;
            if (c_pred->parsed()) horizon_days = m.prediction_days;
        }
        const double spinup = spinup_override >= 0.0 ? spinup_override : m.spinup_days;

        if (c_sim->parsed()) {
            const bool hf = model_flag == "hf";
            SolverConfig cfg = hf ? m.hf_config() : m.lf_config(closure_flag == "smag");
            if (!closure_flag.empty() && closure_flag != "none" && closure_flag != "smag")
                throw ConfigError("simulate supports --closure none|smag");
            const QoiEngine engine(*cfg.grid, m.qois,
                                   hf ? grid_of(m.lf_n).max_wavenumber() : -1);
            FlowState start = detail::resolve_start(start_path, *cfg.grid, spinup, cfg);
            detail::run_and_record(cfg, std::move(start), engine, nullptr, horizon_days, m,
                                   m.output_dir, true);
        } else if (c_track->parsed()) {
            const SolverConfig lf = m.lf_config();
            const QoiEngine engine(*lf.grid, m.qois);
            const CampaignPaths paths(campaign_root);
            if (reference_path.empty())
                reference_path = (paths.hf_dir / "qoi_ref.csv").string();
            if (start_path.empty()) start_path = (paths.hf_dir / "lf_ic.snap").string();
            FlowState start = detail::resolve_start(start_path, *lf.grid, 0.0, lf);
            const auto reference = detail::load_qoi_csv(reference_path, engine.d());
            const TrackResult result = track_reference(lf, std::move(start), engine, reference,
                                                       horizon_days, true, m.burn_in_days);
            std::vector<std::vector<double>> dq_rows;
            for (const auto& rec : result.dataset.records) {
                std::vector<double> row{rec.t_days};
                row.insert(row.end(), rec.dq.begin(), rec.dq.end());
                dq_rows.push_back(std::move(row));
            }
            write_csv_atomic(fs::path(m.output_dir) / "dq.csv", detail::dq_header(engine.d()),
                             dq_rows);
            write_mvg_csv(fit_mvg(result.dataset), fs::path(m.output_dir) / "mvg.csv");
        } else if (c_pred->parsed()) {
            if (!closure_flag.empty()) m.closure = closure_from_name(closure_flag);
            if (replicas > 0) {
                seeds.clear();
                for (int i = 0; i < replicas; ++i) seeds.push_back(std::uint64_t(i));
            }
            if (seeds.empty()) seeds = {0};
            const SolverConfig cfg = m.lf_config(m.closure == ClosureChoice::Smagorinsky);
            const QoiEngine engine(*cfg.grid, m.qois);
            const bool needs_training = m.closure == ClosureChoice::ToPlain ||
                                        m.closure == ClosureChoice::ToIndependent ||
                                        m.closure == ClosureChoice::ToMvg;
            const fs::path tdir =
                train_dir.empty() ? CampaignPaths(campaign_root).train_dir : fs::path(train_dir);
            for (const auto seed : seeds) {
                std::unique_ptr<DeltaQSampler> sampler;
                if (needs_training) {
                    if (m.closure == ClosureChoice::ToMvg)
                        sampler = std::make_unique<DeltaQSampler>(read_mvg_csv(tdir / "mvg.csv"),
                                                                  seed);
                    else
                        sampler = std::make_unique<DeltaQSampler>(
                            m.closure == ClosureChoice::ToPlain ? SampleMode::Plain
                                                                : SampleMode::Independent,
                            read_dq_csv(tdir / "dq.csv", m.burn_in_days), seed);
                }
                FlowState start = detail::resolve_start(start_path, *cfg.grid, spinup, cfg);
                detail::run_and_record(cfg, std::move(start), engine, sampler.get(),
                                       horizon_days, m,
                                       fs::path(m.output_dir) / ("seed_" + std::to_string(seed)),
                                       false);
            }
        } else if (c_ana->parsed()) {
            const CampaignPaths paths(m.output_dir);
            if (fs::exists(paths.analysis_dir / ".done")) fs::remove(paths.analysis_dir / ".done");
            run_analysis(m, paths);
        } else if (c_bench->parsed()) {
            const auto rows = run_bench(m);
            std::vector<std::vector<double>> csv_rows;
            for (std::size_t i = 0; i < rows.size(); ++i)
                csv_rows.push_back({double(i), rows[i].seconds_per_100_days});
            write_csv_atomic(fs::path(m.output_dir) / "bench.csv", {"solver", "s_per_100_days"},
                             csv_rows);
        } else if (c_camp->parsed()) {
            orchestrate_campaign(m);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace vort2d
