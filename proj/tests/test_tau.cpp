#include <catch2/catch.hpp>

#include "test_helpers.hpp"
#include "vort2d/tau_orthogonal.hpp"

using namespace vort2d;
using namespace vort2d::test;

namespace {

FlowState cos5x_state(const WavenumberGrid& g) {
    PhysicalField f(g);
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) f.at(i, j) = std::cos(5.0 * g.x_of(i));
    return state_from_vorticity(to_spectral(f));
}

FlowState turbulent_state(const WavenumberGrid& g, std::uint64_t seed) {
    return state_from_vorticity(random_vorticity(g, seed, 30, 0.3));
}

}  // namespace

TEST_CASE("pattern coefficients: disjoint bands decouple exactly") {
    const auto& g = grid_of(65);
    const QoiEngine engine(g, default_qois());
    const FlowState s = turbulent_state(g, 1);
    const auto sys = solve_pattern_coefficients(engine.basis(s), engine);
    CHECK(sys.coeff[0][2] == 0.0);
    CHECK(sys.coeff[0][3] == 0.0);
    CHECK(sys.coeff[2][0] == 0.0);
    CHECK(sys.coeff[2][1] == 0.0);
    CHECK(sys.coeff[0][0] == 1.0);
    CHECK(sys.orthogonality_residual() <= 1e-9);
}

TEST_CASE("pattern coefficients: single-mode projection value") {
    const auto& g = grid_of(65);
    const QoiEngine engine(g, default_qois());
    const FlowState s = cos5x_state(g);
    // Only band [0,15] carries content; the small-scale systems are singular
    // and must be deactivated rather than fail.
    const auto sys = solve_pattern_coefficients(engine.basis(s), engine);
    CHECK(sys.active[0]);
    CHECK(sys.active[1]);
    CHECK_FALSE(sys.active[2]);
    CHECK_FALSE(sys.active[3]);
    CHECK(rel_err(sys.coeff[0][1], -0.04) < 1e-12);  // c12 = -E/Z
}

TEST_CASE("pattern coefficients: d = 1 is trivial") {
    const auto& g = grid_of(65);
    const QoiEngine engine(g, {{QoiKind::Enstrophy, 0, 15}});
    const FlowState s = cos5x_state(g);
    const auto basis = engine.basis(s);
    const auto sys = solve_pattern_coefficients(basis, engine);
    CHECK(sys.d == 1);
    for (std::size_t i = 0; i < basis[0].c.size(); ++i)
        CHECK(sys.patterns[0].c[i] == basis[0].c[i]);
    CHECK(rel_err(sys.diag[0], 0.5) < 1e-12);  // (ω̄_b, ω̄_b) = 2Z = 0.5
}

TEST_CASE("compute_taus: values and degenerate denominators") {
    const auto& g = grid_of(65);
    const QoiEngine engine(g, {{QoiKind::Enstrophy, 0, 15}});
    const FlowState s = cos5x_state(g);
    const auto sys = solve_pattern_coefficients(engine.basis(s), engine);

    DeltaQRecord zero{0.1, {0.0}};
    CHECK(compute_taus(zero, sys).taus[0] == 0.0);

    DeltaQRecord dq{0.1, {0.01}};
    CHECK(rel_err(compute_taus(dq, sys).taus[0], -0.02) < 1e-12);

    const FlowState empty = state_from_vorticity(SpectralField(g));
    const auto degenerate = solve_pattern_coefficients(engine.basis(empty), engine);
    CHECK_THROWS_AS(compute_taus(dq, degenerate), SolverError);
}

TEST_CASE("reduced term: linearity and zero input") {
    const auto& g = grid_of(65);
    const QoiEngine engine(g, default_qois());
    const FlowState s = turbulent_state(g, 2);
    const auto sys = solve_pattern_coefficients(engine.basis(s), engine);

    TauVector zero{0.1, {0.0, 0.0, 0.0, 0.0}};
    CHECK(reduced_sgs_term(zero, sys).max_abs() == 0.0);

    TauVector one{0.1, {0.0, 2.5, 0.0, 0.0}};
    const SpectralField r = reduced_sgs_term(one, sys);
    for (std::size_t i = 0; i < r.c.size(); ++i) CHECK(r.c[i] == 2.5 * sys.patterns[1].c[i]);
}

TEST_CASE("reduced term matches the closed-form oracle on random states") {
    const auto& g = grid_of(65);
    const QoiEngine engine(g, default_qois());
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
        const FlowState s = turbulent_state(g, 100 + rep);
        const QoiVector q = engine.evaluate(s);
        DeltaQRecord dq;
        dq.t_days = 0.1;
        for (int i = 0; i < 4; ++i) dq.dq.push_back(1e-3 * q.values[i] * dist(gen));

        const auto sys = solve_pattern_coefficients(engine.basis(s), engine);
        const SpectralField numeric = reduced_sgs_term(compute_taus(dq, sys), sys);
        const SpectralField oracle = analytic_reduced_term(s, dq, engine);
        CHECK(max_rel_diff(numeric, oracle) < 1e-8);
    }
}

TEST_CASE("analytic oracle rejects non-paper configurations") {
    const auto& g = grid_of(65);
    const FlowState s = turbulent_state(g, 5);
    DeltaQRecord dq{0.1, {0, 0, 0, 0}};
    const QoiEngine overlapping(
        g, {{QoiKind::Energy, 0, 15}, {QoiKind::Enstrophy, 0, 15},
            {QoiKind::Energy, 10, 21}, {QoiKind::Enstrophy, 10, 21}});
    CHECK_THROWS_AS(analytic_reduced_term(s, dq, overlapping), ConfigError);

    const QoiEngine proper(g, default_qois());
    DeltaQRecord zero{0.1, {0, 0, 0, 0}};
    CHECK(analytic_reduced_term(s, zero, proper).max_abs() == 0.0);
}

TEST_CASE("corrector: zero correction leaves the state unchanged") {
    const auto& g = grid_of(65);
    const QoiEngine engine(g, default_qois());
    const FlowState s = turbulent_state(g, 3);
    DeltaQRecord zero{0.1, {0, 0, 0, 0}};
    const FlowState c = corrector_step(s, zero, engine);
    for (std::size_t i = 0; i < s.w_hat.c.size(); ++i) CHECK(c.w_hat.c[i] == s.w_hat.c[i]);
}

TEST_CASE("corrector: positive ΔQ raises each QoI by ΔQ") {
    const auto& g = grid_of(65);
    const QoiEngine engine(g, default_qois());
    const FlowState s = turbulent_state(g, 4);
    const QoiVector before = engine.evaluate(s);
    DeltaQRecord dq;
    dq.t_days = 0.1;
    for (int i = 0; i < 4; ++i) dq.dq.push_back(1e-4 * before.values[i]);

    CorrectorDiag diag;
    const FlowState c = corrector_step(s, dq, engine, &diag);
    const QoiVector after = engine.evaluate(c);
    for (int i = 0; i < 4; ++i) {
        CHECK(after.values[i] > before.values[i]);
        // realized within the quadratic remainder: O((ΔQ/Q)²·Q) = 1e-8·Q
        CHECK(std::abs(after.values[i] - before.values[i] - dq.dq[i]) <
              1e-6 * before.values[i]);
    }
    CHECK(diag.orthogonality_residual <= 1e-9);
}

TEST_CASE("corrector: degenerate bands are dropped with a warning count") {
    const auto& g = grid_of(65);
    const QoiEngine engine(g, default_qois());
    // two large-scale modes (so ψ̄_b and ω̄_b are independent) but nothing in
    // the small-scale band: exactly the two small-scale patterns drop
    PhysicalField f(g);
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j)
            f.at(i, j) = std::cos(5.0 * g.x_of(i)) + 0.5 * std::cos(3.0 * g.x_of(j));
    const FlowState s = state_from_vorticity(to_spectral(f));
    DeltaQRecord dq{0.1, {1e-6, 1e-6, 1e-9, 1e-9}};
    CorrectorDiag diag;
    const FlowState c = corrector_step(s, dq, engine, &diag);
    CHECK(diag.dropped_patterns == 2);
    CHECK(c.w_hat.finite());

    // a pure single mode has ψ̄_b ∥ ω̄_b, so even the populated band is
    // degenerate (2SZ - 2E² = 0) and every pattern drops
    CorrectorDiag diag_single;
    corrector_step(cos5x_state(g), dq, engine, &diag_single);
    CHECK(diag_single.dropped_patterns == 4);
}

TEST_CASE("tracking error bound: formula values") {
    CHECK(tracking_error_bound(0.0, 0.0, 1.0, 1.0, 0.5, 0.0, BoundKind::Enstrophy) == 0.0);
    const double delta = 1e-3;
    const double bound =
        tracking_error_bound(delta, delta, 1.0, 1.0, 0.5, 0.0, BoundKind::Enstrophy);
    CHECK(rel_err(bound, 1.5 * delta * delta) < 1e-12);
    CHECK_THROWS_AS(tracking_error_bound(delta, delta, 1.0, 1.0, 0.5, 1.0, BoundKind::Enstrophy),
                    ConfigError);
    // energy bound adds the k_min-controlled terms
    const double be =
        tracking_error_bound(delta, delta, 1.0, 1.0, 0.5, 0.0, BoundKind::Energy, 1.0);
    CHECK(be > bound);
}

TEST_CASE("tracking a Smagorinsky reference: fidelity and per-step bound") {
    const auto& g = grid_of(65);
    SolverConfig lf;
    lf.grid = &g;
    lf.dt_days = 0.1;
    const QoiEngine engine(g, default_qois());

    // settle a turbulent-ish state first so QoIs are away from zero
    FlowState start = simulate(lf, 20.0, {}, initial_vorticity(g, 0.05));
    start.t = 0.0;

    // reference: same LF grid but with the Smagorinsky closure, so its QoI
    // trajectory genuinely differs from the plain predictor
    SolverConfig lf_smag = lf;
    lf_smag.closure = SmagorinskyParams{0.1, kTwoPi / 65.0};
    std::vector<QoiVector> reference;
    SimHooks record;
    record.after_step = [&](FlowState& st, long) { reference.push_back(engine.evaluate(st)); };
    simulate(lf_smag, 15.0, record, start);

    const TrackResult result =
        track_reference(lf, start, engine, reference, 15.0, true, 0.0);
    REQUIRE(result.steps.size() == 150);
    CHECK(result.max_orthogonality_residual <= 1e-9);
    for (const auto& step : result.steps) {
        for (int i = 0; i < 4; ++i) {
            // synthetic setup with large per-step corrections; the paper-scale
            // 1e-3 fidelity is enforced by the acceptance suite
            CHECK(std::abs(step.eps[i]) <= 1e-2);
            if (!std::isnan(step.bound[i]))
                CHECK(std::abs(step.eps[i]) <=
                      step.bound[i] * step.bound_factor[i] + 1e-12);
        }
    }
    // ΔQ really was recorded
    double max_dq = 0.0;
    for (const auto& rec : result.dataset.records)
        for (double v : rec.dq) max_dq = std::max(max_dq, std::abs(v));
    CHECK(max_dq > 0.0);
}

TEST_CASE("self-tracking yields exactly zero corrections") {
    const auto& g = grid_of(65);
    SolverConfig lf;
    lf.grid = &g;
    lf.dt_days = 0.1;
    const QoiEngine engine(g, default_qois());
    FlowState start = simulate(lf, 10.0, {}, initial_vorticity(g, 0.05));
    start.t = 0.0;

    std::vector<QoiVector> reference;
    SimHooks record;
    record.after_step = [&](FlowState& st, long) { reference.push_back(engine.evaluate(st)); };
    simulate(lf, 5.0, record, start);

    const TrackResult result = track_reference(lf, start, engine, reference, 5.0, false, 0.0);
    double max_dq = 0.0, scale = 0.0;
    for (std::size_t n = 0; n < result.dataset.records.size(); ++n)
        for (int i = 0; i < 4; ++i) {
            max_dq = std::max(max_dq, std::abs(result.dataset.records[n].dq[i]));
            scale = std::max(scale, std::abs(reference[n].values[i]));
        }
    CHECK(max_dq <= 1e-12 * scale);
}

TEST_CASE("track_reference validates the reference trajectory") {
    const auto& g = grid_of(65);
    SolverConfig lf;
    lf.grid = &g;
    lf.dt_days = 0.1;
    const QoiEngine engine(g, default_qois());
    const FlowState start = initial_vorticity(g, 0.01);
    std::vector<QoiVector> reference(5);  // too short, wrong times
    for (int i = 0; i < 5; ++i) {
        reference[i].t_days = 0.1 * (i + 1);
        reference[i].values = {0, 0, 0, 0};
    }
    CHECK_THROWS_AS(track_reference(lf, start, engine, reference, 10.0), ConfigError);
    std::vector<QoiVector> gapped = reference;
    gapped[3].t_days = 0.7;  // gap
    CHECK_THROWS_AS(track_reference(lf, start, engine, gapped, 0.5), ConfigError);
}
