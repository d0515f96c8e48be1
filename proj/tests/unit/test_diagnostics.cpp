#include "rcm/diagnostics.hpp"
#include "rcm/operators.hpp"
#include "rcm/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rcm;

namespace {

Environment env_of(EnvironmentKind kind, std::uint64_t seed = 2, MeanProfile profile = MeanProfile::constant(1.0))
{
    EnvironmentSpec s;
    s.kind = kind;
    s.seed = seed;
    s.profile = profile;
    return Environment(s);
}

SmoothProfile gaussian(int d, double width)
{
    SmoothProfile p;
    p.kind = SmoothProfile::Kind::gaussian;
    p.d = d;
    p.radius = width;
    return p;
}

SmoothProfile bump(int d, double radius)
{
    SmoothProfile p;
    p.d = d;
    p.radius = radius;
    return make_initial_g(p);
}

std::vector<double> noise(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (double& x : v) {
        x = g(rng);
    }
    return v;
}

Trajectory constant_trajectory(const Lattice& lat, double value, std::vector<double> times)
{
    Trajectory t;
    for (double s : times) {
        Field f(lat, 1, s);
        std::fill(f.values.begin(), f.values.end(), value);
        t.times.push_back(s);
        t.states.push_back(f);
    }
    return t;
}

} // namespace

TEST_SUITE("diagnostics")
{
    TEST_CASE("fit_rate recovers exact powers")
    {
        const std::vector<double> k{8, 16, 32, 64};
        std::vector<double> v;
        for (double x : k) {
            v.push_back(3.0 * std::pow(x, -2.0));
        }
        const RateFit fit = fit_rate(k, v);
        CHECK(fit.slope == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(fit.residual_rms < 1e-12);
        CHECK(fit.excluded == 0);
    }

    TEST_CASE("fit_rate: the stored points reproduce the stored slope")
    {
        const std::vector<double> k{8, 16, 32, 64, 128};
        const std::vector<double> v{0.9, 0.31, 0.12, 0.05, 0.013};
        const RateFit fit = fit_rate(k, v);
        std::vector<double> lx;
        std::vector<double> ly;
        for (std::size_t i = 0; i < fit.scales.size(); ++i) {
            lx.push_back(std::log(fit.scales[i]));
            ly.push_back(std::log(fit.values[i]));
        }
        double mx = 0.0;
        double my = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i] / lx.size();
            my += ly[i] / ly.size();
        }
        double sxy = 0.0;
        double sxx = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        CHECK(std::abs(sxy / sxx - fit.slope) <= 1e-12);
        CHECK(std::abs(my - fit.slope * mx - fit.intercept) <= 1e-12);
    }

    TEST_CASE("fit_rate: a logarithmic factor flattens the slope")
    {
        std::vector<double> k;
        std::vector<double> v;
        for (double x = 16; x <= 4096; x *= 2) {
            k.push_back(x);
            v.push_back(std::log(x) / x);
        }
        const RateFit fit = fit_rate(k, v);
        CHECK(fit.slope > -1.0);
        CHECK(fit.slope < -0.6);
        CHECK(fit.residual_rms > 0.0);
    }

    TEST_CASE("fit_rate input rules")
    {
        const std::vector<double> k{8, 16, 32, 64, 128};
        const std::vector<double> v{1.0, 0.0, 0.25, -1.0, 1.0 / 16};
        const RateFit fit = fit_rate(k, v);
        CHECK(fit.excluded == 2);
        CHECK(fit.scales.size() == 3);
        CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
        const std::vector<double> repeated{8, 8, 16};
        CHECK_THROWS_AS(fit_rate(repeated, std::vector<double>{1, 1, 1}), std::invalid_argument);
        CHECK_THROWS_AS(fit_rate(k, std::vector<double>{1, 0, 0, 0, 1}), std::invalid_argument);
        CHECK_THROWS_AS(fit_rate(k, std::vector<double>{1, 2}), std::invalid_argument);
    }

    TEST_CASE("good vertices in a constant environment")
    {
        const Environment env = env_of(EnvironmentKind::constant);
        // B_2(0) in d = 1 is {-1, 0, 1, 2}; x1 = 0 and x2 = 5 remove one site
        CHECK(good_vertex_fraction(env, 1, 0.0, Point{0, 0, 0}, Point{5, 0, 0}, Point{}, 2, 0.5) == 0.75);
        CHECK(good_vertex_fraction(env, 1, 0.0, Point{0, 0, 0}, Point{1, 0, 0}, Point{}, 2, 1.0) == 0.5);
        CHECK(good_vertex_fraction(env, 2, 0.0, Point{7, 7, 0}, Point{9, 9, 0}, Point{}, 3, 0.5) == 1.0);
        CHECK(good_vertex_fraction(env, 2, 0.0, Point{7, 7, 0}, Point{9, 9, 0}, Point{}, 3, 2.0) == 0.0);
        CHECK_THROWS_AS(good_vertex_fraction(env, 1, 0.0, Point{1, 0, 0}, Point{1, 0, 0}, Point{}, 2, 0.5),
                        std::invalid_argument);
    }

    TEST_CASE("good vertex fraction against a direct count and monotone in delta")
    {
        const Environment env = env_of(EnvironmentKind::static_iid, 17);
        const Point x1{-3, 2, 0};
        const Point x2{4, 1, 0};
        const Point y{1, 1, 0};
        const std::int64_t r = 4;
        double previous = 1.0;
        for (double delta : {0.1, 0.4, 0.8, 1.2, 1.6}) {
            const double frac = good_vertex_fraction(env, 2, 0.0, x1, x2, y, r, delta);
            const Lattice ball = Lattice::integer_box(2, r, y);
            std::size_t good = 0;
            for (std::size_t i = 0; i < ball.size(); ++i) {
                const Point z = ball.grid_point(i);
                if (z != x1 && z != x2 && env.w(0.0, x1, z) >= delta && env.w(0.0, x2, z) >= delta) {
                    ++good;
                }
            }
            CHECK(frac == static_cast<double>(good) / static_cast<double>(ball.size()));
            CHECK(frac <= previous);
            previous = frac;
        }
    }

    TEST_CASE("good vertex fraction grows with the environment and matches (1-q)^2 for bernoulli bonds")
    {
        EnvironmentSpec spec;
        spec.kind = EnvironmentKind::static_iid;
        spec.marginal = MarginalLaw::bernoulli(0.3);
        spec.seed = 40;
        const Environment low(spec);
        spec.profile = MeanProfile::constant(2.0);
        const Environment high(spec);
        const Point x1{-5, 0, 0};
        const Point x2{6, 0, 0};
        for (double delta : {0.5, 1.0, 1.5, 2.5}) {
            CHECK(good_vertex_fraction(high, 1, 0.0, x1, x2, Point{}, 32, delta) >=
                  good_vertex_fraction(low, 1, 0.0, x1, x2, Point{}, 32, delta));
        }
        // a vertex is good iff both bonds are nonzero: Binomial(62, 0.49) out of 64 sites
        const double frac = good_vertex_fraction(low, 1, 0.0, x1, x2, Point{}, 32, 0.1);
        const double sigma = std::sqrt(0.49 * 0.51 * 62.0) / 64.0;
        CHECK(std::abs(frac - 0.49 * 62.0 / 64.0) <= 4.0 * sigma);
    }

    TEST_CASE("good vertex survey summary")
    {
        const Environment env = env_of(EnvironmentKind::static_iid, 6);
        const GoodVertexStats s = good_vertex_survey(env, 1, 8, 0.5, 40, 0.0, 11);
        CHECK(s.samples == 40);
        CHECK(s.min_fraction <= s.mean_fraction);
        CHECK(s.mean_fraction <= 1.0);
        CHECK(s.min_fraction >= 0.0);
        const GoodVertexStats again = good_vertex_survey(env, 1, 8, 0.5, 40, 0.0, 11);
        CHECK(again.mean_fraction == s.mean_fraction);
    }

    TEST_CASE("Poincare ratio on two sites")
    {
        const Environment env = env_of(EnvironmentKind::constant);
        // B_1(0) = {0, 1}: variance 1/4, energy w |1|^{-1-alpha} = 1
        const std::vector<double> f{0.0, 1.0};
        CHECK(poincare_ratio(env, 1, 1.3, 0.0, Point{}, 1, f) == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(poincare_ratio(env, 1, 1.3, 0.0, Point{}, 1, std::vector<double>{2.0, 2.0}) == 0.0);
    }

    TEST_CASE("Poincare ratio is invariant under shifts and scaling of f")
    {
        const Environment env = env_of(EnvironmentKind::piecewise_linear, 8);
        const std::int64_t r = 4;
        std::vector<double> f = noise(64, 1);
        const double base = poincare_ratio(env, 2, 0.8, 0.6, Point{1, -2, 0}, r, f);
        CHECK(base > 0.0);
        for (double& v : f) {
            v = -3.0 * v + 7.0;
        }
        CHECK(poincare_ratio(env, 2, 0.8, 0.6, Point{1, -2, 0}, r, f) == doctest::Approx(base).epsilon(1e-12));
        CHECK_THROWS_AS(poincare_ratio(env, 2, 0.8, 0.6, Point{}, r, std::vector<double>(10)), std::invalid_argument);
    }

    TEST_CASE("multi-scale Poincare degenerate inputs")
    {
        const Environment env = env_of(EnvironmentKind::static_iid, 4);
        const std::vector<double> f = noise(16, 3);
        const std::vector<double> ones(16, 1.0);
        const MultiscaleGap constant_g = multiscale_poincare_gap(env, 1, 1.2, 0.0, 3, 1, f, ones);
        CHECK(std::abs(constant_g.lhs) < 1e-14);
        CHECK(std::abs(constant_g.block_term) < 1e-14);
        CHECK(constant_g.constant == 0.0);
        const MultiscaleGap zero_f = multiscale_poincare_gap(env, 1, 1.2, 0.0, 3, 1, std::vector<double>(16), f);
        CHECK(zero_f.lhs == 0.0);
        CHECK(zero_f.constant == 0.0);
        const MultiscaleGap same_level = multiscale_poincare_gap(env, 1, 1.2, 0.0, 3, 3, f, f);
        CHECK(same_level.lhs == doctest::Approx(same_level.block_term));
        CHECK(same_level.energy_term == 0.0);
        CHECK_THROWS_AS(multiscale_poincare_gap(env, 1, 1.2, 0.0, 3, 4, f, f), std::invalid_argument);
    }

    TEST_CASE("multi-scale Poincare sides by hand on B_4 in one dimension")
    {
        const Environment env = env_of(EnvironmentKind::static_iid, 4);
        const double alpha = 1.2;
        // B_4 = {-3..4}; level-1 blocks are B_2(-2) = {-3..0} and B_2(2) = {1..4}
        const std::vector<double> f = noise(8, 5);
        const std::vector<double> g = noise(8, 6);
        auto avg = [](const std::vector<double>& v, std::size_t lo, std::size_t hi) {
            double s = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                s += v[i];
            }
            return s / static_cast<double>(hi - lo);
        };
        double lhs = 0.0;
        const double gm = avg(g, 0, 8);
        for (std::size_t i = 0; i < 8; ++i) {
            lhs += f[i] * (g[i] - gm);
        }
        double block = 0.0;
        for (std::size_t lo : {std::size_t{0}, std::size_t{4}}) {
            const double gb = avg(g, lo, lo + 4);
            for (std::size_t i = lo; i < lo + 4; ++i) {
                block += f[i] * (g[i] - gb);
            }
        }
        const double fa = avg(f, 0, 4);
        const double fb = avg(f, 4, 8);
        const Lattice box = Lattice::integer_box(1, 4);
        const double energy = dirichlet_energy(env, box, alpha, 0.0, g);
        const double expect_energy = std::sqrt(energy) * std::pow(2.0, (1 + alpha) / 2) * std::sqrt(fa * fa + fb * fb);
        const MultiscaleGap gap = multiscale_poincare_gap(env, 1, alpha, 0.0, 2, 1, f, g);
        CHECK(gap.lhs == doctest::Approx(lhs).epsilon(1e-13));
        CHECK(gap.block_term == doctest::Approx(block).epsilon(1e-13));
        CHECK(gap.energy_term == doctest::Approx(expect_energy).epsilon(1e-12));
        CHECK(gap.constant == doctest::Approx((lhs - block) / expect_energy).epsilon(1e-12));
    }

    TEST_CASE("bar operator gap under a constant profile is the spatial error alone")
    {
        const std::vector<int> ks{4, 8, 16};
        const SmoothProfile f = gaussian(1, 1.0);
        const BarGap a = operator_gap_bar(f, ks, 1.0, 1.5, MeanProfile::constant(2.0), 8.0, 128);
        const BarGap b = operator_gap_bar(f, ks, 1.0, 1.5, MeanProfile::constant(2.0), 8.0, 128);
        REQUIRE(a.rows.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(a.rows[i].gap == b.rows[i].gap);
            CHECK(a.rows[i].pi_part == 0.0);
            CHECK(a.rows[i].cross == 0.0);
            CHECK(a.rows[i].residual == a.rows[i].gap);
            CHECK(a.rows[i].gap > 0.0);
            if (i > 0) {
                CHECK(a.rows[i].gap < a.rows[i - 1].gap);
            }
        }
        CHECK(a.fit.slope < 0.0);
    }

    TEST_CASE("bar operator gap expansion against direct time quadrature")
    {
        const SmoothProfile f = gaussian(1, 1.0);
        const double alpha = 1.3;
        const double T = 1.0;
        const double half = 8.0;
        const int ref = 128;
        const MeanProfile profile = MeanProfile::decaying(1.0, 0.5, 1.0);
        const std::vector<int> ks{4, 8, 16};
        const BarGap gap = operator_gap_bar(f, ks, T, alpha, profile, half, ref);

        const Lattice reference(1, ref, half);
        const std::vector<double> b_ref = apply_bar_continuum(reference, sample_values(reference, f), alpha, 1.0);
        for (std::size_t r = 0; r < ks.size(); ++r) {
            const int k = ks[r];
            const Lattice lat(1, k, half);
            const JumpOperator op =
                JumpOperator::bar_discrete(lat, alpha, MeanProfile::constant(1.0), BoundaryMode::periodic);
            const std::vector<double> fk = sample_values(lat, f);
            std::vector<double> a(lat.size());
            op.apply(0.0, fk, a);
            // composite Simpson on a geometric grid in t: K(k^alpha t) varies on the scale k^{-alpha}
            const double scale = std::pow(k, alpha);
            auto integrand = [&](double t) {
                const double Kt = profile(scale * t);
                double s = 0.0;
                for (std::size_t i = 0; i < lat.size(); ++i) {
                    const double e = Kt * a[i] - b_ref[torus_index(reference, lat, i)];
                    s += e * e;
                }
                return s * lat.cell_measure();
            };
            const double direct = integrate_adaptive(integrand, 0.0, T, 1e-11);
            CAPTURE(k);
            CHECK(gap.rows[r].gap == doctest::Approx(direct).epsilon(1e-7));
            CHECK(gap.rows[r].pi_part > 0.0);
            CHECK(gap.rows[r].residual == doctest::Approx(gap.rows[r].gap - gap.rows[r].pi_part - gap.rows[r].cross));
            const double pi = pi_term(profile, scale * T);
            CHECK(gap.rows[r].calibration * T * pi ==
                  doctest::Approx(gap.rows[r].pi_part + gap.rows[r].cross).epsilon(1e-12));
        }
        CHECK_THROWS_AS(operator_gap_bar(f, std::vector<int>{4, 8}, T, alpha, profile, half, ref),
                        std::invalid_argument);
    }

    TEST_CASE("random operator gap vanishes in a constant environment")
    {
        const Environment env = env_of(EnvironmentKind::constant, 1, MeanProfile::constant(1.5));
        const SmoothProfile f = bump(1, 1.5);
        CHECK(operator_gap_random(env, f, 4, 0.5, 1.2, GapVariant::scaled, 4.0) == 0.0);
        CHECK(operator_gap_random(env, f, 4, 0.5, 1.2, GapVariant::hat, 4.0) < 1e-24);
        const Environment random = env_of(EnvironmentKind::piecewise_linear, 3);
        CHECK(operator_gap_random(random, f, 4, 0.5, 1.2, GapVariant::scaled, 4.0) > 0.0);
    }

    TEST_CASE("cut-off gap: zero when the support sits inside R/2, decaying otherwise")
    {
        const std::vector<double> radii{4.0, 8.0, 16.0};
        const CutoffGap inside = cutoff_gap(bump(1, 1.5), radii, 1.2, 1.0, 32.0, 8);
        for (double g : inside.gaps) {
            CHECK(g == 0.0);
        }
        CHECK(std::isnan(inside.fit.slope));
        SmoothProfile slow;
        slow.kind = SmoothProfile::Kind::polynomial_decay;
        slow.d = 1;
        slow.beta = 1.0;
        const CutoffGap tail = cutoff_gap(slow, radii, 1.2, 1.0, 32.0, 8);
        CHECK(tail.gaps[0] > tail.gaps[1]);
        CHECK(tail.gaps[1] > tail.gaps[2]);
        CHECK(tail.fit.slope < 0.0);
        CHECK_THROWS_AS(cutoff_gap(slow, std::vector<double>{4.0, 8.0, 64.0}, 1.2, 1.0, 32.0, 8),
                        std::invalid_argument);
    }

    TEST_CASE("sup L2 distance between trajectories")
    {
        const Lattice coarse(1, 4, 0.5); // unit box (-1/2, 1/2]
        const Lattice fine(1, 16, 0.5);
        const std::vector<double> times{0.0, 0.5, 1.0};
        const SupL2Error same = sup_l2_error(constant_trajectory(coarse, 1.0, times), constant_trajectory(fine, 1.0, times));
        CHECK(same.value == 0.0);
        CHECK(same.leaked == 0.0);
        const SupL2Error offset =
            sup_l2_error(constant_trajectory(coarse, 1.0, times), constant_trajectory(fine, 1.3, times));
        CHECK(offset.value == doctest::Approx(0.3).epsilon(1e-14));
        CHECK(offset.per_snapshot.size() == 3);

        const Lattice wide(1, 16, 1.0);
        const SupL2Error leak = sup_l2_error(constant_trajectory(coarse, 1.0, times), constant_trajectory(wide, 1.0, times));
        CHECK(leak.value == 0.0);
        CHECK(leak.leaked == doctest::Approx(1.0).epsilon(1e-14)); // outside mass: length 1

        // a metric on a common grid: symmetric, triangle inequality
        Trajectory a = constant_trajectory(coarse, 0.0, times);
        Trajectory b = a;
        Trajectory c = a;
        const std::vector<double> na = noise(12, 1);
        const std::vector<double> nb = noise(12, 2);
        const std::vector<double> nc = noise(12, 3);
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t i = 0; i < 4; ++i) {
                a.states[j].values[i] = na[4 * j + i];
                b.states[j].values[i] = nb[4 * j + i];
                c.states[j].values[i] = nc[4 * j + i];
            }
        }
        CHECK(sup_l2_error(a, b).value == sup_l2_error(b, a).value);
        CHECK(sup_l2_error(a, c).value <= sup_l2_error(a, b).value + sup_l2_error(b, c).value + 1e-15);

        CHECK_THROWS_AS(sup_l2_error(constant_trajectory(coarse, 1.0, times),
                                     constant_trajectory(fine, 1.0, std::vector<double>{0.0, 0.4, 1.0})),
                        std::invalid_argument);
        CHECK_THROWS_AS(sup_l2_error(constant_trajectory(coarse, 1.0, times),
                                     constant_trajectory(fine, 1.0, std::vector<double>{0.0, 1.0})),
                        std::invalid_argument);
    }
}
