#include "rcm/errors.hpp"
#include "rcm/solver.hpp"
#include "rcm/spectral.hpp"
#include "rcm/testfn.hpp"

#include <doctest.h>

#include <cmath>

using namespace rcm;

namespace {

SmoothProfile profile(SmoothProfile::Kind kind, int d, double radius)
{
    SmoothProfile p;
    p.kind = kind;
    p.d = d;
    p.radius = radius;
    return p;
}

Vec shift(Vec x, int c, double h)
{
    x[c] += h;
    return x;
}

double sup_diff(std::span<const double> a, std::span<const double> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

double sup_abs(std::span<const double> a)
{
    double m = 0.0;
    for (double v : a) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

} // namespace

TEST_SUITE("testfn")
{
    TEST_CASE("compact bump: unit peak, flat center, zero outside its radius")
    {
        for (int d = 1; d <= 3; ++d) {
            const SmoothProfile p = make_initial_g(profile(SmoothProfile::Kind::compact_bump, d, 1.5));
            const Jet c = p.jet(Vec{});
            CHECK(c.value == doctest::Approx(1.0));
            for (int a = 0; a < d; ++a) {
                CHECK(c.grad[a] == 0.0);
            }
            CHECK(p.support_radius() == 1.5);
            Vec out{};
            out[0] = 1.5;
            CHECK(p(out) == 0.0);
            out[0] = 1.6;
            CHECK(p(out) == 0.0);
            Vec in{};
            in[d - 1] = 1.4;
            CHECK(p(in) > 0.0);
        }
    }

    TEST_CASE("jets match central differences to second order")
    {
        std::vector<SmoothProfile> cases;
        cases.push_back(profile(SmoothProfile::Kind::compact_bump, 2, 2.0));
        cases.push_back(profile(SmoothProfile::Kind::gaussian, 3, 1.3));
        SmoothProfile poly = profile(SmoothProfile::Kind::polynomial_decay, 2, 1.0);
        poly.beta = 1.5;
        cases.push_back(poly);
        SmoothProfile wave = profile(SmoothProfile::Kind::gaussian, 2, 1.0);
        wave.omega = 2.0;
        wave.phase = 0.3;
        wave.amplitude = 0.7;
        wave.center = {0.2, -0.1, 0.0};
        cases.push_back(wave);

        const Vec x{0.41, -0.37, 0.23};
        for (const SmoothProfile& p : cases) {
            CAPTURE(p.describe());
            const Jet j = p.jet(x);
            for (double h : {1e-3, 5e-4}) {
                // central differences are exact up to h^2 f'''/6; 1e-5 is far above that and round-off
                for (int a = 0; a < p.d; ++a) {
                    const Jet up = p.jet(shift(x, a, h));
                    const Jet dn = p.jet(shift(x, a, -h));
                    CHECK(std::abs((up.value - dn.value) / (2 * h) - j.grad[a]) < 1e-5);
                    for (int b = 0; b < p.d; ++b) {
                        CHECK(std::abs((up.grad[b] - dn.grad[b]) / (2 * h) - j.hess[a][b]) < 1e-5);
                        for (int c = 0; c < p.d; ++c) {
                            CHECK(std::abs((up.hess[b][c] - dn.hess[b][c]) / (2 * h) - j.third[a][b][c]) < 1e-4);
                        }
                    }
                }
            }
        }
    }

    TEST_CASE("finite-difference error shrinks like h^2")
    {
        const SmoothProfile p = profile(SmoothProfile::Kind::gaussian, 1, 0.8);
        const Vec x{0.3, 0.0, 0.0};
        const double exact = p.jet(x).grad[0];
        auto err = [&](double h) { return std::abs((p(shift(x, 0, h)) - p(shift(x, 0, -h))) / (2 * h) - exact); };
        const double ratio = err(1e-2) / err(5e-3);
        CHECK(ratio == doctest::Approx(4.0).epsilon(0.02));
    }

    TEST_CASE("initial data must be compactly supported")
    {
        CHECK_THROWS_AS(make_initial_g(profile(SmoothProfile::Kind::polynomial_decay, 1, 1.0)), ConfigError);
        CHECK_THROWS_AS(make_initial_g(profile(SmoothProfile::Kind::gaussian, 1, 1.0)), ConfigError);
        CHECK_THROWS_AS(make_initial_g(profile(SmoothProfile::Kind::compact_bump, 1, 0.0)), ConfigError);
        CHECK_THROWS_AS(profile_kind_from_string("tent"), ConfigError);
        CHECK(profile_kind_from_string(to_string(SmoothProfile::Kind::gaussian)) == SmoothProfile::Kind::gaussian);
    }

    TEST_CASE("cut-off: one inside R/2, zero beyond R, gradient of order 1/R")
    {
        for (int d = 1; d <= 3; ++d) {
            for (double R : {1.0, 4.0, 32.0}) {
                Vec x{};
                x[0] = 0.5 * R;
                const Jet inner = cutoff_psi(R, x, d);
                CHECK(inner.value == 1.0);
                CHECK(inner.grad[0] == 0.0);
                x[0] = R;
                CHECK(cutoff_psi(R, x, d).value == 0.0);
                x[0] = 2.0 * R;
                CHECK(cutoff_psi(R, x, d).value == 0.0);
                double worst = 0.0;
                for (int s = 1; s < 200; ++s) {
                    Vec y{};
                    const double r = R * (0.5 + 0.5 * s / 200.0);
                    for (int c = 0; c < d; ++c) {
                        y[c] = r / std::sqrt(static_cast<double>(d));
                    }
                    const Jet j = cutoff_psi(R, y, d);
                    CHECK(j.value >= 0.0);
                    CHECK(j.value <= 1.0);
                    double g2 = 0.0;
                    for (int c = 0; c < d; ++c) {
                        g2 += j.grad[c] * j.grad[c];
                    }
                    worst = std::max(worst, R * std::sqrt(g2));
                }
                // quintic bridge: max slope 15/8 on [0,1], chain rule factor 2
                CHECK(worst <= 3.75 + 1e-9);
                CHECK(worst > 1.0);
            }
        }
        CHECK_THROWS_AS(cutoff_psi(0.5, Vec{}, 1), std::invalid_argument);
        CHECK(cutoff_profile(0.25) == 1.0);
        CHECK(cutoff_profile(0.75) == doctest::Approx(0.5));
        CHECK(cutoff_profile(1.5) == 0.0);
    }

    TEST_CASE("cut-off jet matches differences of its value")
    {
        const double R = 3.0;
        const Vec x{1.1, 0.9, 0.0};
        const Jet j = cutoff_psi(R, x, 2);
        const double h = 1e-5;
        for (int a = 0; a < 2; ++a) {
            const double fd = (cutoff_psi(R, shift(x, a, h), 2).value - cutoff_psi(R, shift(x, a, -h), 2).value) / (2 * h);
            CHECK(fd == doctest::Approx(j.grad[a]).epsilon(1e-6));
            for (int b = 0; b < 2; ++b) {
                const double fd2 =
                    (cutoff_psi(R, shift(x, a, h), 2).grad[b] - cutoff_psi(R, shift(x, a, -h), 2).grad[b]) / (2 * h);
                CHECK(fd2 == doctest::Approx(j.hess[a][b]).epsilon(1e-5));
            }
        }
    }

    TEST_CASE("decay certificate separates decay rates")
    {
        SmoothProfile poly = profile(SmoothProfile::Kind::polynomial_decay, 2, 1.0);
        poly.beta = 1.0;
        const DecayCertificate same = decay_certificate(poly, 1.0);
        CHECK(same.decays);
        CHECK(std::isfinite(same.constant));
        CHECK(same.constant >= 1.0); // value 1 at the origin
        CHECK_FALSE(decay_certificate(poly, 2.0).decays);
        CHECK(decay_certificate(profile(SmoothProfile::Kind::gaussian, 3, 2.0), 4.0).decays);
        const DecayCertificate bump = decay_certificate(make_initial_g(profile(SmoothProfile::Kind::compact_bump, 1, 1.0)), 10.0);
        CHECK(bump.decays);
    }

    TEST_CASE("modulated source rejects profiles that decay too slowly")
    {
        const Lattice grid(1, 4, 8.0);
        SmoothProfile poly = profile(SmoothProfile::Kind::polynomial_decay, 1, 1.0);
        poly.beta = 0.5;
        CHECK_THROWS_AS(SourceTerm::modulated(grid, 1.5, 1.0, 1.0, poly, 1.0, 1.0, 1.0), ConfigError);
    }

    TEST_CASE("source round trip: the limit solve with h reproduces f = (1 + t) g")
    {
        const Lattice grid(1, 8, 8.0);
        const SmoothProfile g = profile(SmoothProfile::Kind::gaussian, 1, 1.0);
        const double alpha = 1.2;
        const double K = 0.8;
        const double T = 1.0;
        const SourceTerm src = SourceTerm::modulated(grid, alpha, K, T, g, 1.0, 1.0, 1.0);

        // h(t) = g - (1 + t) Lbar g, evaluated independently at an off-node time
        const std::vector<double> gv = sample_values(grid, g);
        const std::vector<double> lg = apply_bar_continuum(grid, gv, alpha, K);
        std::vector<double> h(grid.size());
        src.sample(0.37, h);
        std::vector<double> expect(grid.size());
        for (std::size_t i = 0; i < expect.size(); ++i) {
            expect[i] = gv[i] - 1.37 * lg[i];
        }
        CHECK(sup_diff(h, expect) < 1e-7 * sup_abs(expect));

        SolveParams params;
        params.T = T;
        params.snapshots = 4;
        params.dt_override = 1e-3;
        const Trajectory traj = solve_limit(grid, src.initial(), &src, alpha, K, params);
        std::vector<double> target(grid.size());
        src.target(T, target);
        CHECK(sup_diff(traj.final_state().values, target) < 1e-5);
        for (std::size_t i = 0; i < target.size(); ++i) {
            CHECK(target[i] == doctest::Approx(2.0 * gv[i]).epsilon(1e-14));
        }
    }

    TEST_CASE("zero source targets the free evolution")
    {
        const Lattice grid(2, 4, 4.0);
        const SmoothProfile g = make_initial_g(profile(SmoothProfile::Kind::compact_bump, 2, 1.5));
        const SourceTerm src = SourceTerm::zero(grid, 0.8, 1.0, 0.5, g);
        SolveParams params;
        params.T = 0.5;
        params.snapshots = 2;
        const Trajectory traj = solve_limit(grid, src.initial(), &src, 0.8, 1.0, params);
        std::vector<double> target(grid.size());
        src.target(0.5, target);
        CHECK(sup_diff(traj.final_state().values, target) < 1e-12);
    }

    TEST_CASE("cut-off Duhamel source reproduces its compactly supported target")
    {
        const Lattice grid(1, 8, 8.0);
        const SmoothProfile g = make_initial_g(profile(SmoothProfile::Kind::compact_bump, 1, 1.0));
        const double alpha = 1.5;
        const SourceTerm src = SourceTerm::cutoff_duhamel(grid, alpha, 1.0, 1.0, g, std::nullopt, 3.0);
        std::vector<double> target(grid.size());
        src.target(0.6, target);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (std::abs(grid.position(i)[0]) >= 5.0) {
                CHECK(target[i] == 0.0);
            }
        }
        SolveParams params;
        params.T = 1.0;
        params.snapshots = 4;
        params.dt_override = 1e-3;
        const Trajectory traj = solve_limit(grid, src.initial(), &src, alpha, 1.0, params);
        src.target(1.0, target);
        CHECK(sup_diff(traj.final_state().values, target) < 1e-4);
        CHECK_THROWS_AS(SourceTerm::cutoff_duhamel(grid, alpha, 1.0, 1.0, g, std::nullopt, 6.5), ConfigError);
    }
}
