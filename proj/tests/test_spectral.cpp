#include <catch2/catch.hpp>

#include <thread>

#include "test_helpers.hpp"
#include "vort2d/filters.hpp"

using namespace vort2d;
using namespace vort2d::test;

namespace {

PhysicalField cosine_field(const WavenumberGrid& g, int kx, int ky = 0) {
    PhysicalField f(g);
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j)
            f.at(i, j) = std::cos(kx * g.x_of(i) + ky * g.x_of(j));
    return f;
}

}  // namespace

TEST_CASE("grid construction and mode pairing") {
    CHECK_THROWS_AS(WavenumberGrid(64), ConfigError);
    CHECK_THROWS_AS(WavenumberGrid(1), ConfigError);
    const auto& g = grid_of(65);
    CHECK(g.max_wavenumber() == 32);
    CHECK(g.dealias_n() == 97);
    CHECK(grid_of(257).dealias_n() == 385);
    // every mode has its conjugate partner
    for (int k = -32; k <= 32; ++k) {
        CHECK(g.wavenumber(g.index_of(k)) == k);
        CHECK(g.wavenumber(g.index_of(-k)) == -k);
    }
}

TEST_CASE("to_spectral matches the direct DFT on a random field") {
    const auto& g = grid_of(9);
    const PhysicalField f = random_physical(g, 42);
    const SpectralField fh = to_spectral(f);
    for (int kx = -4; kx <= 4; ++kx)
        for (int ky = -4; ky <= 4; ++ky) {
            const Complex want = naive_dft_coefficient(f, kx, ky);
            CHECK(std::abs(fh.at(kx, ky) - want) < 1e-12 * g.size());
        }
}

TEST_CASE("to_spectral of a single cosine") {
    const auto& g = grid_of(65);
    const SpectralField fh = to_spectral(cosine_field(g, 5));
    const double n2 = 65.0 * 65.0;
    CHECK(std::abs(fh.at(5, 0) - Complex(n2 / 2, 0)) < 1e-9 * n2);
    CHECK(std::abs(fh.at(-5, 0) - Complex(n2 / 2, 0)) < 1e-9 * n2);
    double off = 0.0;
    for (int kx = -32; kx <= 32; ++kx)
        for (int ky = -32; ky <= 32; ++ky)
            if (!(ky == 0 && std::abs(kx) == 5)) off = std::max(off, std::abs(fh.at(kx, ky)));
    CHECK(off < 1e-10 * n2);

    PhysicalField zero(g);
    const SpectralField zh = to_spectral(zero);
    CHECK(zh.max_abs() == 0.0);
}

TEST_CASE("round trip and conjugate symmetry on random fields") {
    const auto& g = grid_of(33);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const PhysicalField f = random_physical(g, seed);
        const SpectralField fh = to_spectral(f);
        CHECK(conjugate_asymmetry(fh) < 1e-12);
        const PhysicalField back = to_physical(fh);
        double err = 0.0;
        for (std::size_t i = 0; i < f.v.size(); ++i)
            err = std::max(err, std::abs(back.v[i] - f.v[i]));
        CHECK(err < 1e-12 * f.max_abs());
    }
}

TEST_CASE("to_physical reports symmetry violations") {
    const auto& g = grid_of(33);
    SpectralField fh = to_spectral(random_physical(g, 7));
    fh.at(3, 2) += Complex(0.0, 1e-3) * fh.max_abs();
    CHECK_THROWS_AS(to_physical(fh), SpectralError);
    // below threshold passes
    SpectralField ok = to_spectral(random_physical(g, 8));
    ok.at(3, 2) += Complex(0.0, 1e-10) * ok.max_abs();
    CHECK_NOTHROW(to_physical(ok));
}

TEST_CASE("gradient on analytic fields") {
    const auto& g = grid_of(65);
    PhysicalField f(g);
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) f.at(i, j) = std::sin(g.x_of(i));
    const auto [gx, gy] = gradient(to_spectral(f));
    const PhysicalField dx = to_physical(gx), dy = to_physical(gy);
    double err = 0.0;
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) {
            err = std::max(err, std::abs(dx.at(i, j) - std::cos(g.x_of(i))));
            err = std::max(err, std::abs(dy.at(i, j)));
        }
    CHECK(err < 1e-12);

    PhysicalField c(g);
    for (auto& v : c.v) v = 3.25;
    const auto [cx, cy] = gradient(to_spectral(c));
    CHECK(cx.max_abs() < 1e-12 * g.size());
    CHECK(cy.max_abs() < 1e-12 * g.size());

    PhysicalField f3(g);
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) f3.at(i, j) = std::sin(3.0 * g.x_of(j));
    const PhysicalField d3 = to_physical(gradient_y(to_spectral(f3)));
    err = 0.0;
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j)
            err = std::max(err, std::abs(d3.at(i, j) - 3.0 * std::cos(3.0 * g.x_of(j))));
    CHECK(err < 1e-11);
}

TEST_CASE("laplacian and its inverse") {
    const auto& g = grid_of(65);
    const SpectralField w = to_spectral(cosine_field(g, 5));
    const PhysicalField lap = to_physical(laplacian(w));
    const PhysicalField inv = to_physical(inverse_laplacian(w));
    double err_l = 0.0, err_i = 0.0;
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) {
            err_l = std::max(err_l, std::abs(lap.at(i, j) + 25.0 * std::cos(5 * g.x_of(i))));
            err_i = std::max(err_i, std::abs(inv.at(i, j) + std::cos(5 * g.x_of(i)) / 25.0));
        }
    CHECK(err_l < 1e-10);
    CHECK(err_i < 1e-12);

    PhysicalField c(g);
    for (auto& v : c.v) v = 2.0;
    CHECK(inverse_laplacian(to_spectral(c)).max_abs() < 1e-12 * g.size());

    // inverse_laplacian ∘ laplacian = identity away from k = 0
    SpectralField r = to_spectral(random_physical(g, 11));
    r.at(0, 0) = 0.0;
    CHECK(max_rel_diff(inverse_laplacian(laplacian(r)), r) < 1e-13);
}

TEST_CASE("jacobian of analytic fields") {
    const auto& g = grid_of(65);
    PhysicalField psi(g), w(g);
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) {
            psi.at(i, j) = std::sin(g.x_of(i));
            w.at(i, j) = std::sin(g.x_of(j));
        }
    const PhysicalField jp = to_physical(jacobian(to_spectral(psi), to_spectral(w)));
    double err = 0.0;
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j)
            err = std::max(err, std::abs(jp.at(i, j) - std::cos(g.x_of(i)) * std::cos(g.x_of(j))));
    CHECK(err < 1e-12);
}

TEST_CASE("jacobian antisymmetry and discrete conservation") {
    const auto& g = grid_of(65);
    for (std::uint64_t seed : {10ull, 11ull, 12ull}) {
        const SpectralField w = random_vorticity(g, seed, 30);
        const SpectralField psi = inverse_laplacian(w);
        const SpectralField j_ww = jacobian(w, w);
        CHECK(j_ww.max_abs() < 1e-12 * w.max_abs() * w.max_abs());

        const SpectralField j = jacobian(psi, w);
        const double nj = norm(j);
        CHECK(std::abs(inner_product(w, j)) <= 1e-10 * norm(w) * nj);
        CHECK(std::abs(inner_product(psi, j)) <= 1e-10 * norm(psi) * nj);
    }
}

TEST_CASE("filters: construction and weights") {
    const auto& g = grid_of(129);  // resolves |k| <= 64
    const FilterMask sharp = make_filter(SharpSquare{32}, g);
    CHECK(sharp.w[g.idx(g.index_of(33), g.index_of(0))] == 0.0);
    CHECK(sharp.w[g.idx(g.index_of(32), g.index_of(32))] == 1.0);

    const FilterMask gauss = make_filter(GaussianFilter{2.0 * kTwoPi / 65.0}, g);
    CHECK(gauss.w[g.idx(0, 0)] == 1.0);

    const FilterMask band = make_filter(RoundBand{0, 15}, g);
    CHECK(band.w[g.idx(g.index_of(11), g.index_of(11))] == 0.0);  // |k| = 15.56 >= 15.5
    CHECK(band.w[g.idx(g.index_of(15), g.index_of(0))] == 1.0);

    CHECK_THROWS_AS(make_filter(RoundBand{5, 3}, g), ConfigError);
    CHECK_THROWS_AS(make_filter(GaussianFilter{0.0}, g), ConfigError);
}

TEST_CASE("filters: application, idempotence, disjoint supports") {
    const auto& g = grid_of(65);
    const SpectralField f = to_spectral(random_physical(g, 21));
    const FilterMask sharp = make_filter(SharpSquare{20}, g);
    const SpectralField once = apply_filter(sharp, f);
    const SpectralField twice = apply_filter(sharp, once);
    for (std::size_t i = 0; i < f.c.size(); ++i) CHECK(once.c[i] == twice.c[i]);

    const FilterMask low = make_filter(RoundBand{0, 15}, g);
    const FilterMask high = make_filter(RoundBand{16, 21}, g);
    CHECK(apply_filter(high, apply_filter(low, f)).max_abs() == 0.0);

    const SpectralField c5 = to_spectral(cosine_field(g, 5));
    const SpectralField kept = apply_filter(make_filter(SharpSquare{32}, g), c5);
    for (std::size_t i = 0; i < c5.c.size(); ++i) CHECK(kept.c[i] == c5.c[i]);
}

TEST_CASE("diagonal operators commute with binary filters") {
    const auto& g = grid_of(33);
    const SpectralField f = to_spectral(random_physical(g, 31));
    const FilterMask band = make_filter(RoundBand{2, 9}, g);
    const SpectralField a = gradient_x(apply_filter(band, f));
    const SpectralField b = apply_filter(band, gradient_x(f));
    for (std::size_t i = 0; i < a.c.size(); ++i) CHECK(a.c[i] == b.c[i]);
    const SpectralField la = laplacian(apply_filter(band, f));
    const SpectralField lb = apply_filter(band, laplacian(f));
    for (std::size_t i = 0; i < la.c.size(); ++i) CHECK(la.c[i] == lb.c[i]);
}

TEST_CASE("inner products") {
    const auto& g = grid_of(65);
    const SpectralField c5 = to_spectral(cosine_field(g, 5));
    CHECK(rel_err(inner_product(c5, c5), 0.5) < 1e-12);

    const SpectralField zero(g);
    CHECK(inner_product(c5, zero) == 0.0);

    PhysicalField s(g), c(g);
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) {
            s.at(i, j) = std::sin(g.x_of(i));
            c.at(i, j) = std::cos(g.x_of(i));
        }
    CHECK(std::abs(inner_product(to_spectral(s), to_spectral(c))) < 1e-14);
}

TEST_CASE("Parseval: spectral inner product equals the grid average") {
    const auto& g = grid_of(33);
    for (std::uint64_t seed : {5ull, 6ull}) {
        const PhysicalField f = random_physical(g, seed);
        double mean_sq = 0.0;
        for (double v : f.v) mean_sq += v * v;
        mean_sq /= double(f.v.size());
        const double ip = inner_product(to_spectral(f), to_spectral(f));
        CHECK(ip >= 0.0);
        CHECK(rel_err(ip, mean_sq) < 1e-10);
    }
}

TEST_CASE("coarse graining") {
    const auto& fine = grid_of(257);
    const auto& coarse = grid_of(65);
    const SpectralField c5 = to_spectral(cosine_field(fine, 5));
    const PhysicalField down = to_physical(coarse_grain(c5, coarse));
    double err = 0.0;
    for (int i = 0; i < coarse.n(); ++i)
        for (int j = 0; j < coarse.n(); ++j)
            err = std::max(err, std::abs(down.at(i, j) - std::cos(5 * coarse.x_of(i))));
    CHECK(err < 1e-12);

    const SpectralField c40 = to_spectral(cosine_field(fine, 40));
    // the (±40, 0) modes have no image on the coarse grid; only transform
    // noise far below the mode amplitude may remain
    CHECK(coarse_grain(c40, coarse).max_abs() < 1e-10 * (65.0 * 65.0 / 2.0));

    const SpectralField f = to_spectral(random_physical(coarse, 17));
    const SpectralField same = coarse_grain(f, coarse);
    for (std::size_t i = 0; i < f.c.size(); ++i) CHECK(same.c[i] == f.c[i]);

    CHECK_THROWS_AS(coarse_grain(f, fine), SpectralError);
}

TEST_CASE("transforms are safe under concurrent use") {
    const auto& g = grid_of(65);
    std::vector<std::thread> workers;
    std::vector<double> errs(4, 1.0);
    for (int t = 0; t < 4; ++t)
        workers.emplace_back([&, t] {
            double worst = 0.0;
            for (int rep = 0; rep < 20; ++rep) {
                const PhysicalField f = random_physical(g, 100 + t * 20 + rep);
                const PhysicalField back = to_physical(to_spectral(f));
                for (std::size_t i = 0; i < f.v.size(); ++i)
                    worst = std::max(worst, std::abs(back.v[i] - f.v[i]));
            }
            errs[t] = worst;
        });
    for (auto& w : workers) w.join();
    for (double e : errs) CHECK(e < 1e-12);
}
