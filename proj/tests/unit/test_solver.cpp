#include "rcm/errors.hpp"
#include "rcm/solver.hpp"
#include "rcm/spectral.hpp"

#include <doctest.h>

#include <cmath>

using namespace rcm;

namespace {

Environment env_of(EnvironmentKind kind, std::uint64_t seed = 1, MeanProfile profile = MeanProfile::constant(1.0))
{
    EnvironmentSpec s;
    s.kind = kind;
    s.seed = seed;
    s.profile = profile;
    return Environment(s);
}

SmoothProfile bump(double r = 1.0)
{
    SmoothProfile p;
    p.radius = r;
    return make_initial_g(p);
}

double l2(const Field& f)
{
    double s = 0.0;
    for (double v : f.values) {
        s += v * v;
    }
    return std::sqrt(s * f.lattice.cell_measure());
}

} // namespace

TEST_SUITE("solver")
{
    TEST_CASE("CFL step against a direct row sum")
    {
        const Lattice box = Lattice::integer_box(1, 4); // 8 sites
        const JumpOperator op = JumpOperator::regional(box, 1.5, env_of(EnvironmentKind::constant));
        double smax = 0.0;
        for (std::size_t i = 0; i < box.size(); ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < box.size(); ++j) {
                if (i != j) {
                    row += std::pow(std::abs(static_cast<double>(box.grid_point(i)[0] - box.grid_point(j)[0])), -2.5);
                }
            }
            smax = std::max(smax, row);
        }
        SolveParams params;
        const StepPlan plan = cfl_dt(op, params);
        CHECK(plan.max_rate == doctest::Approx(smax).epsilon(1e-12));
        CHECK(plan.dt <= 0.5 / smax);
        CHECK(plan.dt * plan.steps == doctest::Approx(params.T).epsilon(1e-14));
        CHECK(plan.steps % static_cast<std::size_t>(params.snapshots) == 0);

        // row sums scale like k^alpha
        const Environment env = env_of(EnvironmentKind::piecewise_linear);
        const StepPlan a = cfl_dt(JumpOperator::scaled(Lattice(1, 16, 4.0), 1.5, env, BoundaryMode::periodic), params);
        const StepPlan b = cfl_dt(JumpOperator::scaled(Lattice(1, 32, 4.0), 1.5, env, BoundaryMode::periodic), params);
        CHECK(b.max_rate / a.max_rate == doctest::Approx(std::pow(2.0, 1.5)).epsilon(0.02));

        // single pair with weight s
        const Lattice pair = Lattice::integer_box(1, 1);
        const JumpOperator two = JumpOperator::regional(pair, 1.0, env_of(EnvironmentKind::constant));
        SolveParams one;
        one.cfl_fraction = 1.0;
        const StepPlan p = cfl_dt(two, one);
        CHECK(p.dt <= 1.0 / two.max_rate());
        CHECK(p.dt * p.steps == doctest::Approx(1.0).epsilon(1e-14));

        SolveParams bad;
        bad.dt_override = 2.0 / smax;
        CHECK_THROWS_AS(cfl_dt(op, bad), NumericalError);
    }

    TEST_CASE("constants stay constant, mass is conserved, L2 contracts")
    {
        const Lattice lat(1, 8, 3.0);
        for (Scheme scheme : {Scheme::euler, Scheme::heun}) {
            SolveParams params;
            params.scheme = scheme;
            const Environment env = env_of(EnvironmentKind::trigonometric, 4);
            const JumpOperator op = JumpOperator::scaled(lat, 1.2, env, BoundaryMode::regional);
            Field c(lat);
            std::fill(c.values.begin(), c.values.end(), 0.7);
            const Trajectory flat = solve_parabolic(op, c, SourceSampler{}, params);
            for (const Field& s : flat.states) {
                for (double v : s.values) {
                    CHECK(v == 0.7);
                }
            }
            const Field g = sample_profile(lat, bump());
            const Trajectory u = solve_parabolic(op, g, SourceSampler{}, params);
            CHECK(u.times.front() == 0.0);
            CHECK(u.times.back() == doctest::Approx(params.T).epsilon(1e-14));
            for (std::size_t j = 1; j < u.times.size(); ++j) {
                CHECK(u.times[j] > u.times[j - 1]);
                CHECK(u.mass[j] == doctest::Approx(u.mass[0]).epsilon(1e-10));
            }
        }
        const JumpOperator frozen = JumpOperator::scaled(lat, 0.9, env_of(EnvironmentKind::static_iid, 2), BoundaryMode::periodic);
        const Trajectory u = solve_parabolic(frozen, sample_profile(lat, bump()), SourceSampler{}, SolveParams{});
        for (std::size_t j = 1; j < u.states.size(); ++j) {
            CHECK(l2(u.states[j]) <= l2(u.states[j - 1]) * (1 + 1e-14));
        }
    }

    TEST_CASE("Euler is first order, Heun second order")
    {
        const Lattice lat(1, 8, 2.0);
        const JumpOperator op = JumpOperator::scaled(lat, 1.5, env_of(EnvironmentKind::trigonometric, 6), BoundaryMode::periodic);
        const Field g = sample_profile(lat, bump(1.2));
        const double base = cfl_dt(op, SolveParams{}).dt;
        for (auto [scheme, order] : {std::pair{Scheme::euler, 1.0}, std::pair{Scheme::heun, 2.0}}) {
            std::vector<Field> finals;
            for (double f : {1.0, 0.5, 0.25}) {
                SolveParams p;
                p.scheme = scheme;
                p.dt_override = base * f;
                finals.push_back(solve_parabolic(op, g, SourceSampler{}, p).final_state());
            }
            const RichardsonEstimate r = richardson(finals[0], finals[1], finals[2]);
            CHECK(r.order == doctest::Approx(order).epsilon(0.25));
            // halving dt changes the answer by no more than 10x the first-order estimate
            CHECK(r.difference_fine <= 10.0 * r.difference_coarse);
        }
    }

    TEST_CASE("forced solve equals the unforced solve plus the discrete Duhamel sum")
    {
        const Lattice lat(1, 4, 2.0);
        const JumpOperator op = JumpOperator::scaled(lat, 1.1, env_of(EnvironmentKind::static_iid, 3), BoundaryMode::periodic);
        const Field g = sample_profile(lat, bump());
        SourceSampler h = [&](double t, std::span<double> out) {
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = std::sin(3.0 * t) * std::cos(lat.position(i)[0]);
            }
        };
        const Trajectory forced = solve_parabolic(op, g, h, SolveParams{});
        const Trajectory free = solve_parabolic(op, g, SourceSampler{}, SolveParams{});
        const Trajectory source_only = solve_parabolic(op, Field(lat), h, SolveParams{});
        for (std::size_t j = 0; j < forced.states.size(); ++j) {
            for (std::size_t i = 0; i < lat.size(); ++i) {
                CHECK(forced.states[j].values[i] ==
                      doctest::Approx(free.states[j].values[i] + source_only.states[j].values[i]).scale(1.0).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("limit solver: Fourier mode decay, zero mode, mass")
    {
        const Lattice grid(1, 16, 4.0);
        const double xi = 2.0 * M_PI * 2 / 8.0;
        const double alpha = 1.4;
        const double K = 0.9;
        std::vector<double> g(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            g[i] = std::cos(xi * grid.position(i)[0]);
        }
        SolveParams p;
        p.T = 0.5;
        const Trajectory u = solve_limit(grid, g, nullptr, alpha, K, p);
        const double rate = K * stable_constant(1, alpha) * std::pow(xi, alpha);
        for (std::size_t j = 0; j < u.states.size(); ++j) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                CHECK(u.states[j].values[i] == doctest::Approx(std::exp(-rate * u.times[j]) * g[i]).scale(1.0).epsilon(1e-12));
            }
        }

        const Trajectory v = solve_limit(grid, sample_values(grid, bump()), nullptr, alpha, K, p);
        for (double m : v.mass) {
            CHECK(m == doctest::Approx(v.mass.front()).epsilon(1e-12));
        }
    }

    TEST_CASE("piecewise-constant extension")
    {
        const Lattice lat(1, 4, 1.0); // cells (z, z + 1/4] for z = -3/4, ..., 1
        Field f(lat);
        for (std::size_t i = 0; i < lat.size(); ++i) {
            f.values[i] = static_cast<double>(i);
        }
        const std::size_t at_zero = lat.index(Point{0, 0, 0});
        // a corner z closes the cell of z - 1/k; z + 1/k still belongs to z
        CHECK(extend_piecewise_constant(f, Vec{0.0, 0, 0}) == f.values[at_zero - 1]);
        CHECK(extend_piecewise_constant(f, Vec{0.1, 0, 0}) == f.values[at_zero]);
        CHECK(extend_piecewise_constant(f, Vec{0.25, 0, 0}) == f.values[at_zero]);
        CHECK(extend_piecewise_constant(f, Vec{0.2500001, 0, 0}) == f.values[at_zero + 1]);
        CHECK(extend_piecewise_constant(f, Vec{1.5, 0, 0}) == 0.0);
        // the cells cover (-3/4, 5/4], where the extension integrates to the lattice integral
        const int n = 40000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            sum += extend_piecewise_constant(f, Vec{-0.75 + (i + 0.5) * 2.0 / n, 0, 0}) * 2.0 / n;
        }
        CHECK(extend_piecewise_constant(f, Vec{-0.8, 0, 0}) == 0.0);
        CHECK(sum == doctest::Approx(integrate(f)).epsilon(1e-12));
    }
}
