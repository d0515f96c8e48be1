#include "rcm/errors.hpp"
#include "rcm/lattice.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace rcm;

TEST_SUITE("lattice")
{
    TEST_CASE("site counts and measures")
    {
        const Lattice a(1, 1, 4.0);
        CHECK(a.size() == 8);
        CHECK(a.total_measure() == doctest::Approx(8.0));

        const Lattice b(1, 4, 4.0);
        CHECK(b.size() == 32);
        CHECK(b.cell_measure() == 0.25);
        CHECK(b.total_measure() == doctest::Approx(8.0));

        // brute-force enumeration of k^{-1} Z^2 cap (-2, 2]^2 at k = 2
        int count = 0;
        for (int i = -10; i <= 10; ++i) {
            for (int j = -10; j <= 10; ++j) {
                const double x = i / 2.0;
                const double y = j / 2.0;
                count += (x > -2 && x <= 2 && y > -2 && y <= 2) ? 1 : 0;
            }
        }
        const Lattice c(2, 2, 2.0);
        CHECK(c.size() == static_cast<std::size_t>(count));
        CHECK(c.size() == 64);
        CHECK(c.total_measure() == doctest::Approx(16.0));
    }

    TEST_CASE("non-integer 2Rk is a configuration error")
    {
        CHECK_THROWS_AS(Lattice(1, 3, 0.25), ConfigError);
        CHECK_THROWS_AS(Lattice(4, 1, 1.0), std::invalid_argument);
    }

    TEST_CASE("index round trip and half-open convention")
    {
        const Lattice lat(2, 3, 1.0);
        for (std::size_t i = 0; i < lat.size(); ++i) {
            CHECK(lat.index(lat.grid_point(i)) == i);
        }
        const Lattice line(1, 1, 2.0);
        CHECK(line.contains(Point{2, 0, 0}));
        CHECK_FALSE(line.contains(Point{-2, 0, 0}));
        CHECK(line.position(0)[0] == -1.0);
        CHECK(line.wrap(Point{-2, 0, 0})[0] == 2);
    }

    TEST_CASE("dyadic blocks")
    {
        const auto top = dyadic_blocks(1, 2, 2);
        REQUIRE(top.size() == 1);
        CHECK(top[0].center[0] == 0);

        std::set<std::int64_t> centers;
        for (const auto& b : dyadic_blocks(1, 2, 1)) {
            centers.insert(b.center[0]);
        }
        CHECK(centers == std::set<std::int64_t>{-2, 2});

        CHECK(dyadic_blocks(1, 3, 1).size() == 4);
        CHECK_THROWS_AS(dyadic_blocks(1, 1, 2), std::invalid_argument);
    }

    TEST_CASE("dyadic blocks partition B_{2^m}")
    {
        for (int d : {1, 2}) {
            for (int m = 0; m <= 4; ++m) {
                const Lattice outer = Lattice::integer_box(d, std::int64_t{1} << m);
                for (int n = 0; n <= m; ++n) {
                    const auto blocks = dyadic_blocks(d, m, n);
                    CHECK(blocks.size() == static_cast<std::size_t>(1) << (d * (m - n)));
                    std::vector<int> hits(outer.size(), 0);
                    double measure = 0.0;
                    for (const auto& b : blocks) {
                        for (int c = 0; c < d; ++c) {
                            // odd multiple of 2^n (or the single center 0 when m == n)
                            const std::int64_t q = b.center[c] >> n;
                            CHECK(((m == n && b.center[c] == 0) || (q % 2 != 0 && (q << n) == b.center[c])));
                        }
                        const Lattice box = b.box(d);
                        measure += box.total_measure();
                        for (std::size_t s : sites_of(outer, box)) {
                            ++hits[s];
                        }
                    }
                    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
                    CHECK(measure == doctest::Approx(outer.total_measure()));
                }
            }
        }
    }

    TEST_CASE("block averages")
    {
        const std::vector<double> f{-1, 0, 1, 2};
        const std::vector<std::size_t> all{0, 1, 2, 3};
        CHECK(block_average(f, all) == doctest::Approx(0.5));
        const std::vector<double> c(4, 3.25);
        CHECK(block_average(c, all) == 3.25);
        CHECK_THROWS_AS(block_average(f, std::vector<std::size_t>{}), std::invalid_argument);

        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1, 1);
        std::vector<double> r(1000);
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] = u(rng);
            if (i % 3 == 0) {
                idx.push_back(i);
            }
        }
        long double direct = 0.0L;
        for (std::size_t i : idx) {
            direct += r[i];
        }
        direct /= idx.size();
        CHECK(std::abs(block_average(r, idx) - static_cast<double>(direct)) <= 1e-14 * std::abs(static_cast<double>(direct)) + 1e-16);

        // linearity
        std::vector<double> s(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            s[i] = 2.0 * r[i] + f[i % 4];
        }
        std::vector<double> f4(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            f4[i] = f[i % 4];
        }
        CHECK(block_average(s, idx) == doctest::Approx(2.0 * block_average(r, idx) + block_average(f4, idx)).epsilon(1e-12));
    }

    TEST_CASE("integrate uses the cell measure")
    {
        Field f(Lattice(1, 4, 1.0));
        std::fill(f.values.begin(), f.values.end(), 1.0);
        CHECK(integrate(f) == doctest::Approx(2.0));
    }
}
