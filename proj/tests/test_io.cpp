#include <catch2/catch.hpp>

#include <unistd.h>

#include <fstream>

#include "test_helpers.hpp"
#include "vort2d/cli.hpp"

using namespace vort2d;
using namespace vort2d::test;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("vort2d_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

// Tiny but complete campaign manifest; HF horizon of a few days keeps the
// suite fast while still exercising the 257-grid path.
std::string tiny_manifest(const fs::path& outdir) {
    return "hf.n = 65\n"
           "hf.dt_days = 0.01\n"
           "lf.n = 33\n"
           "lf.dt_days = 0.1\n"
           "qoi = E[0,7]; Z[0,7]; E[8,10]; Z[8,10]\n"
           "closure.name = to-mvg\n"
           "spinup.days = 50\n"
           "reference.days = 4\n"
           "training.days = 2\n"
           "prediction.days = 2\n"
           "replicas.seeds = 0,1\n"
           "burn_in.days = 0.2\n"
           "snapshot.cadence_days = 1\n"
           "stats.cadence_days = 0.5\n"
           "output.dir = " + outdir.string() + "\n";
}

}  // namespace

TEST_CASE("manifest defaults and validation") {
    TempDir tmp("manifest");
    write_text(tmp.path / "empty.cfg", "");
    const RunManifest m = parse_manifest(tmp.path / "empty.cfg");
    CHECK(m.hf_n == 257);
    CHECK(m.lf_n == 65);
    CHECK(m.hf_dt_days == 0.01);
    CHECK(m.lf_dt_days == 0.1);
    CHECK(m.physics.nu == Approx(4.4e-6));
    CHECK(m.physics.mu == Approx(1.8e-3));
    CHECK(m.physics.forcing.amplitude == Approx(std::pow(2.0, 1.5)));
    CHECK(m.qois == default_qois());

    write_text(tmp.path / "even.cfg", "lf.n = 64\n");
    try {
        parse_manifest(tmp.path / "even.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("odd") != std::string::npos);
    }

    write_text(tmp.path / "cs.cfg", "closure.name = smag\nclosure.cs = 0.02\n");
    CHECK(parse_manifest(tmp.path / "cs.cfg").smag_cs == 0.02);

    write_text(tmp.path / "unknown.cfg", "lf.resolution = 65\n");
    try {
        parse_manifest(tmp.path / "unknown.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("lf.resolution") != std::string::npos);
    }

    write_text(tmp.path / "baddt.cfg", "lf.dt_days = 0.025\n");
    CHECK_THROWS_AS(parse_manifest(tmp.path / "baddt.cfg"), ConfigError);

    write_text(tmp.path / "badcad.cfg", "stats.cadence_days = 0.35\n");
    CHECK_THROWS_AS(parse_manifest(tmp.path / "badcad.cfg"), ConfigError);

    write_text(tmp.path / "roundtrip.cfg", tiny_manifest(tmp.path / "x"));
    const RunManifest a = parse_manifest(tmp.path / "roundtrip.cfg");
    write_manifest(a, tmp.path / "echo.cfg");
    const RunManifest b = parse_manifest(tmp.path / "echo.cfg");
    CHECK(a.qois == b.qois);
    CHECK(a.replica_seeds == b.replica_seeds);
    CHECK(a.training_days == b.training_days);
}

TEST_CASE("snapshot format: round trip, size, corruption") {
    TempDir tmp("snapshot");
    const auto& g = grid_of(65);
    const PhysicalField w = random_physical(g, 33);
    write_snapshot(w, 12.5, tmp.path / "a.snap");
    CHECK(fs::file_size(tmp.path / "a.snap") == 21 + 8 * 65 * 65);

    const Snapshot snap = read_snapshot(tmp.path / "a.snap");
    CHECK(snap.t_days == 12.5);
    REQUIRE(snap.w.n() == 65);
    for (std::size_t i = 0; i < w.v.size(); ++i) CHECK(snap.w.v[i] == w.v[i]);

    std::string bytes = slurp(tmp.path / "a.snap");
    bytes[0] = 'X';
    write_text(tmp.path / "bad.snap", bytes);
    CHECK_THROWS_AS(read_snapshot(tmp.path / "bad.snap"), IoError);

    write_text(tmp.path / "short.snap", bytes.substr(0, 100));
    std::string fixed = bytes.substr(0, 100);
    fixed[0] = 'V';
    write_text(tmp.path / "short.snap", fixed);
    CHECK_THROWS_AS(read_snapshot(tmp.path / "short.snap"), IoError);
}

TEST_CASE("csv: 17-digit round trip is exact") {
    TempDir tmp("csv");
    Rng rng(21);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 50; ++i)
        rows.push_back({rng.normal() * 1e-7, rng.normal() * 1e3, rng.uniform01()});
    write_csv_atomic(tmp.path / "t.csv", {"a", "b", "c"}, rows);
    const CsvTable table = read_csv(tmp.path / "t.csv");
    REQUIRE(table.rows.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < 3; ++j) CHECK(table.rows[i][j] == rows[i][j]);
    CHECK(table.column("b") == 1);
    CHECK_THROWS_AS(table.column("zz"), IoError);
}

TEST_CASE("cli: predict with no closure equals simulate bitwise") {
    TempDir tmp("cli_eq");
    // start snapshot at stationary amplitude on the LF grid
    const auto& g = grid_of(33);
    SolverConfig lf;
    lf.grid = &g;
    lf.dt_days = 0.1;
    FlowState s = simulate(lf, 5.0, {}, initial_vorticity(g, 0.05));
    write_snapshot(to_physical(s.w_hat), 0.0, tmp.path / "start.snap");

    const std::string cfg_text =
        "lf.n = 33\nqoi = E[0,7]; Z[0,7]\nstats.cadence_days = 0.5\n"
        "output.dir = " + (tmp.path / "simout").string() + "\n";
    write_text(tmp.path / "m.cfg", cfg_text);

    CHECK(cli_dispatch({"simulate", "--config", (tmp.path / "m.cfg").string(), "--model", "lf",
                        "--horizon-days", "2", "--start", (tmp.path / "start.snap").string()}) ==
          0);
    CHECK(cli_dispatch({"predict", "--config", (tmp.path / "m.cfg").string(), "--closure",
                        "none", "--horizon-days", "2", "--seed", "0", "--start",
                        (tmp.path / "start.snap").string(), "--output",
                        (tmp.path / "predout").string()}) == 0);

    const std::string a = slurp(tmp.path / "simout" / "qoi.csv");
    const std::string b = slurp(tmp.path / "predout" / "seed_0" / "qoi.csv");
    CHECK(a == b);
    CHECK(!a.empty());
}

TEST_CASE("cli: usage errors exit 1, missing files exit nonzero") {
    CHECK(cli_dispatch({"frobnicate"}) == 1);
    CHECK(cli_dispatch({"simulate", "--config", "/nonexistent/path.cfg"}) != 0);
}

TEST_CASE("campaign: end to end, resume, analysis outputs") {
    TempDir tmp("campaign");
    const fs::path outdir = tmp.path / "camp";
    write_text(tmp.path / "m.cfg", tiny_manifest(outdir));
    const RunManifest m = parse_manifest(tmp.path / "m.cfg");

    std::ostringstream log;
    orchestrate_campaign(m, log);
    const CampaignPaths paths(outdir);
    CHECK(fs::exists(paths.hf_dir / "qoi_ref.csv"));
    CHECK(fs::exists(paths.hf_dir / "lf_ic.snap"));
    CHECK(fs::exists(paths.train_dir / "dq.csv"));
    CHECK(fs::exists(paths.train_dir / "mvg.csv"));
    CHECK(fs::exists(paths.seed_dir(0) / "qoi.csv"));
    CHECK(fs::exists(paths.seed_dir(1) / "qoi.csv"));
    CHECK(fs::exists(paths.analysis_dir / "summary.csv"));
    CHECK(fs::exists(paths.analysis_dir / "ks.csv"));

    // reference rows at LF-step cadence: 10 per day
    CHECK(read_csv(paths.hf_dir / "qoi_ref.csv").rows.size() == 40);
    // dq rows: 10 per tracked day
    CHECK(read_csv(paths.train_dir / "dq.csv").rows.size() == 20);

    // decorrelation series: valid Pearson values, high on day one (shared IC)
    const CsvTable corr = read_csv(paths.seed_dir(0) / "correlation.csv");
    REQUIRE(corr.rows.size() == 2);
    for (const auto& row : corr.rows) {
        CHECK(row[1] >= -1.0);
        CHECK(row[1] <= 1.0);
    }
    CHECK(corr.rows[0][1] > 0.5);

    // re-running a completed campaign is a no-op (same bytes)
    const std::string qoi_before = slurp(paths.seed_dir(0) / "qoi.csv");
    std::ostringstream log2;
    orchestrate_campaign(m, log2);
    CHECK(slurp(paths.seed_dir(0) / "qoi.csv") == qoi_before);
    CHECK(log2.str().find("[hf] up to date") != std::string::npos);

    // deleting the analysis directory redoes only the analysis
    fs::remove_all(paths.analysis_dir);
    std::ostringstream log3;
    orchestrate_campaign(m, log3);
    CHECK(fs::exists(paths.analysis_dir / "summary.csv"));
    CHECK(log3.str().find("[pred 0] up to date") != std::string::npos);
    CHECK(slurp(paths.seed_dir(0) / "qoi.csv") == qoi_before);
}

TEST_CASE("cli: track emits ten dq rows per simulated day") {
    TempDir tmp("cli_track");
    const fs::path outdir = tmp.path / "camp";
    write_text(tmp.path / "m.cfg", tiny_manifest(outdir));
    const RunManifest m = parse_manifest(tmp.path / "m.cfg");
    std::ostringstream log;
    const CampaignPaths paths(outdir);
    run_hf_reference(m, paths, log);

    CHECK(cli_dispatch({"track", "--config", (tmp.path / "m.cfg").string(), "--output",
                        (tmp.path / "trackout").string(), "--horizon-days", "2"}) == 0);
    const CsvTable dq = read_csv(tmp.path / "trackout" / "dq.csv");
    CHECK(dq.rows.size() == 20);
    CHECK(dq.header.front() == "t_days");
    CHECK(dq.header.back() == "dq4");
    CHECK(fs::exists(tmp.path / "trackout" / "mvg.csv"));
}

TEST_CASE("campaign: reproducibility of QoI CSVs across fresh runs") {
    TempDir tmp("repro");
    const fs::path out1 = tmp.path / "c1";
    const fs::path out2 = tmp.path / "c2";
    RunManifest m1, m2;
    {
        write_text(tmp.path / "m1.cfg", tiny_manifest(out1));
        write_text(tmp.path / "m2.cfg", tiny_manifest(out2));
        m1 = parse_manifest(tmp.path / "m1.cfg");
        m2 = parse_manifest(tmp.path / "m2.cfg");
    }
    std::ostringstream log;
    orchestrate_campaign(m1, log);
    orchestrate_campaign(m2, log);
    for (const char* rel : {"hf/qoi_ref.csv", "hf/qoi_daily.csv", "train/dq.csv",
                            "train/mvg.csv", "pred/seed_0/qoi.csv", "pred/seed_1/qoi.csv"})
        CHECK(slurp(out1 / rel) == slurp(out2 / rel));
}

TEST_CASE("analysis of identical trajectories gives zero KS") {
    TempDir tmp("ks0");
    const fs::path outdir = tmp.path / "camp";
    RunManifest m;
    m.lf_n = 33;
    m.hf_n = 65;
    m.qois = {{QoiKind::Energy, 0, 7}, {QoiKind::Enstrophy, 0, 7}};
    m.replica_seeds = {0};
    m.burn_in_days = 0.0;
    m.prediction_days = 3.0;
    m.output_dir = outdir;
    const CampaignPaths paths(outdir);

    std::vector<std::vector<double>> rows;
    Rng rng(2);
    for (int i = 1; i <= 30; ++i) rows.push_back({0.1 * i, rng.uniform01(), rng.uniform01()});
    write_csv_atomic(paths.hf_dir / "qoi_daily.csv", {"t_days", "q1", "q2"}, rows);
    detail::mark_done(paths.hf_dir);
    write_csv_atomic(paths.seed_dir(0) / "qoi.csv", {"t_days", "q1", "q2"}, rows);
    write_csv_atomic(paths.seed_dir(0) / "correlation.csv", {"t_days", "correlation"},
                     {{1.0, 1.0}});
    write_csv_atomic(paths.seed_dir(0) / "spectrum.csv", {"shell", "energy"}, {{0.0, 0.0}});
    detail::mark_done(paths.seed_dir(0));

    std::ostringstream log;
    run_analysis(m, paths, log);
    const CsvTable ks = read_csv(paths.analysis_dir / "ks.csv");
    REQUIRE(ks.rows.size() == 2);
    for (const auto& row : ks.rows) CHECK(row[2] == 0.0);
}

TEST_CASE("mvg csv round trip") {
    TempDir tmp("mvg");
    MvgModel m;
    m.d = 3;
    m.mean = {0.1, -0.2, 0.3};
    m.cov = {2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 0.9};
    refactor(m);
    write_mvg_csv(m, tmp.path / "mvg.csv");
    const MvgModel r = read_mvg_csv(tmp.path / "mvg.csv");
    CHECK(r.mean == m.mean);
    CHECK(r.cov == m.cov);
    // factorization reproduces the covariance
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k)
                acc += r.factor[std::size_t(i) * 3 + k] * r.factor[std::size_t(j) * 3 + k];
            CHECK(acc == Approx(m.cov_at(i, j)).margin(1e-12));
        }
}
