#include "rcm/environment.hpp"
#include "rcm/errors.hpp"
#include "rcm/philox.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rcm;

namespace {

EnvironmentSpec make(EnvironmentKind kind, std::uint64_t seed = 7, MarginalLaw law = MarginalLaw::uniform02(),
                     MeanProfile profile = MeanProfile::constant(1.0))
{
    EnvironmentSpec s;
    s.kind = kind;
    s.seed = seed;
    s.marginal = law;
    s.profile = profile;
    return s;
}

Point pt(std::int64_t x, std::int64_t y = 0)
{
    return Point{x, y, 0};
}

} // namespace

TEST_SUITE("environment")
{
    TEST_CASE("philox4x32-10 known answers")
    {
        using C = Philox4x32::Counter;
        CHECK(Philox4x32::apply(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
        CHECK(Philox4x32::apply(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
              C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
        CHECK(Philox4x32::apply(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
              C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
    }

    TEST_CASE("marginal laws have mean one and respect their bounds")
    {
        for (const MarginalLaw& law : {MarginalLaw::uniform02(), MarginalLaw::bernoulli(0.3), MarginalLaw::two_point(0.2, 3.0)}) {
            CHECK(law.mean() == doctest::Approx(1.0).epsilon(1e-14));
            std::mt19937_64 rng(1);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const int n = 200000;
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                const double z = law.quantile(u(rng));
                CHECK_MESSAGE((z >= 0.0 && z <= law.upper_bound()), law.describe());
                sum += z;
            }
            CHECK(std::abs(sum / n - 1.0) <= 4.0 * std::sqrt(law.variance() / n));
        }
        const MarginalLaw b = MarginalLaw::bernoulli(0.3);
        CHECK(b.quantile(0.29) == 0.0);
        CHECK(b.quantile(0.31) == doctest::Approx(1.0 / 0.7));
        CHECK_THROWS_AS(MarginalLaw::bernoulli(1.0), ConfigError);
    }

    TEST_CASE("constant environment and the diagonal")
    {
        const Environment env(make(EnvironmentKind::constant, 0, MarginalLaw::uniform02(), MeanProfile::constant(1.0)));
        CHECK(env.w(3.7, pt(1), pt(5)) == 1.0);
        CHECK(env.deterministic());
        for (auto kind : {EnvironmentKind::constant, EnvironmentKind::piecewise_linear, EnvironmentKind::static_iid}) {
            const Environment e(make(kind));
            CHECK(e.w(1.3, pt(4), pt(4)) == 0.0);
        }
        CHECK_THROWS_AS(env.w(-1.0, pt(0), pt(1)), std::invalid_argument);
    }

    TEST_CASE("piecewise-linear values at integer and quarter times")
    {
        const Environment env(make(EnvironmentKind::piecewise_linear, 99));
        const Point a = pt(-3);
        const Point b = pt(5);
        for (std::int64_t n : {0, 1, 7}) {
            const double z1 = env.draw(RandomSource{n + 1, 1}, a, b);
            const double z2 = env.draw(RandomSource{n + 1, 2}, a, b);
            CHECK(env.w(static_cast<double>(n), a, b) == z1);
            CHECK(env.w(n + 0.25, a, b) == doctest::Approx(0.5 * (z1 + z2)).epsilon(1e-15));
            CHECK(env.w(n + 0.5, a, b) == doctest::Approx(z2).epsilon(1e-15));
        }
    }

    TEST_CASE("symmetry, bounds and determinism")
    {
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<std::int64_t> site(-1000, 1000);
        std::uniform_real_distribution<double> time(0.0, 50.0);
        for (auto kind : {EnvironmentKind::piecewise_linear, EnvironmentKind::trigonometric, EnvironmentKind::static_iid,
                          EnvironmentKind::modulated_static}) {
            const auto profile = kind == EnvironmentKind::modulated_static ? MeanProfile::decaying(1.0, 0.5, 1.0)
                                                                          : MeanProfile::constant(1.0);
            const Environment env(make(kind, 3, MarginalLaw::bernoulli(0.2), profile));
            const Environment twin(make(kind, 3, MarginalLaw::bernoulli(0.2), profile));
            for (int i = 0; i < 10000; ++i) {
                const Point x = pt(site(rng), site(rng));
                const Point y = pt(site(rng), site(rng));
                const double t = time(rng);
                const double w = env.w(t, x, y);
                CHECK(w == env.w(t, y, x));
                CHECK(w == twin.w(t, x, y));
                CHECK(w >= 0.0);
                CHECK(w <= env.upper_bound());
            }
        }
    }

    TEST_CASE("Monte Carlo mean and pair decorrelation")
    {
        const Environment env(make(EnvironmentKind::piecewise_linear, 2024));
        const int n = 100000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            sum += env.w(3.3, pt(i), pt(i + 1 + i % 7));
        }
        const double sigma = std::sqrt(MarginalLaw::uniform02().variance() / n);
        CHECK(std::abs(sum / n - 1.0) <= 3.0 * sigma);

        const int m = 1000;
        std::vector<double> a(m), b(m);
        for (int i = 0; i < m; ++i) {
            a[i] = env.w(0.8, pt(2 * i), pt(2 * i + 1));
            b[i] = env.w(0.8, pt(2 * i + 1), pt(2 * i + 2));
        }
        double ma = 0, mb = 0;
        for (int i = 0; i < m; ++i) {
            ma += a[i] / m;
            mb += b[i] / m;
        }
        double cov = 0, va = 0, vb = 0;
        for (int i = 0; i < m; ++i) {
            cov += (a[i] - ma) * (b[i] - mb);
            va += (a[i] - ma) * (a[i] - ma);
            vb += (b[i] - mb) * (b[i] - mb);
        }
        CHECK(std::abs(cov / std::sqrt(va * vb)) <= 4.0 / std::sqrt(m));
    }

    TEST_CASE("temporal Lipschitz bound")
    {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> time(0.0, 20.0);
        std::uniform_real_distribution<double> step(-0.3, 0.3);
        for (auto kind : {EnvironmentKind::piecewise_linear, EnvironmentKind::trigonometric, EnvironmentKind::modulated_static}) {
            const auto profile = kind == EnvironmentKind::modulated_static ? MeanProfile::decaying(1.0, 0.5, 1.0)
                                                                          : MeanProfile::constant(1.0);
            const Environment env(make(kind, 4, MarginalLaw::uniform02(), profile));
            for (int i = 0; i < 5000; ++i) {
                const double t = time(rng);
                const double s = std::max(0.0, t + step(rng));
                const Point x = pt(i);
                const Point y = pt(i + 3);
                CHECK(std::abs(env.w(t, x, y) - env.w(s, x, y)) <= env.lipschitz() * std::abs(t - s) * (1 + 1e-12) + 1e-15);
            }
        }
        const Environment frozen(make(EnvironmentKind::static_iid, 4));
        CHECK(frozen.time_invariant());
        CHECK(frozen.w(0.1, pt(0), pt(1)) == frozen.w(99.0, pt(0), pt(1)));
    }

    TEST_CASE("inconsistent specs are rejected")
    {
        CHECK_THROWS_AS(Environment(make(EnvironmentKind::trigonometric, 1, MarginalLaw::uniform02(),
                                         MeanProfile::decaying(1.0, 0.5, 1.0))),
                        ConfigError);
        CHECK_THROWS_AS(Environment(make(EnvironmentKind::piecewise_linear, 1, MarginalLaw::uniform02(),
                                         MeanProfile::constant(2.0))),
                        ConfigError);
        CHECK_THROWS_AS(MeanProfile::decaying(1.0, 0.5, 0.5), ConfigError);
    }

    TEST_CASE("mean profile bounds and pi")
    {
        const MeanProfile p = MeanProfile::decaying(1.0, 0.5, 1.0);
        for (double t = 0.0; t < 100.0; t += 0.01) {
            CHECK(p(t) >= p.lower_bound());
            CHECK(p(t) <= p.upper_bound());
        }
        CHECK(pi_term(MeanProfile::constant(1.3), 5.0) == 0.0);
        CHECK(pi_term(p, 1.0) == doctest::Approx(0.125).epsilon(1e-14));
        CHECK(pi_term(p, 1e4) <= 0.25 / (1.0 * 1e4));
        CHECK_THROWS_AS(pi_term(p, 0.0), std::invalid_argument);
        // closed form against direct quadrature on a non-unit rate
        const MeanProfile q = MeanProfile::decaying(2.0, 0.7, 0.8);
        double direct = 0.0;
        const int n = 200000;
        const double t = 3.0;
        for (int i = 0; i < n; ++i) {
            const double s = (i + 0.5) * t / n;
            direct += std::pow(q(s) - 2.0, 2) * t / n;
        }
        CHECK(pi_term(q, t) == doctest::Approx(direct / t).epsilon(1e-8));
    }

    TEST_CASE("time change")
    {
        const Environment flat(make(EnvironmentKind::constant, 0, MarginalLaw::uniform02(), MeanProfile::constant(2.5)));
        const Environment unit = flat.time_change();
        CHECK(unit.w(1.7, pt(0), pt(3)) == doctest::Approx(1.0).epsilon(1e-15));

        const MeanProfile p = MeanProfile::decaying(1.0, 0.5, 1.0);
        for (double s : {0.0, 1e-3, 0.5, 3.0, 100.0, 1e5}) {
            CHECK(std::abs(p.integral(p.inverse_integral(s)) - s) <= 1e-12 * std::max(1.0, s));
        }
        const Environment env(make(EnvironmentKind::modulated_static, 8, MarginalLaw::uniform02(), p));
        const Environment changed = env.time_change();
        CHECK(changed.mean_profile().is_constant());
        CHECK(changed.mean_profile().limit() == 1.0);
        for (double t : {0.0, 0.4, 2.0}) {
            const double base = p.inverse_integral(t);
            CHECK(changed.w(t, pt(1), pt(4)) == doctest::Approx(env.w(base, pt(1), pt(4)) / p(base)).epsilon(1e-12));
        }
        CHECK(changed.upper_bound() == doctest::Approx(env.upper_bound() / p.lower_bound()));
    }
}
