#include "rcm/kernel.hpp"

#include "rcm/environment.hpp"
#include "rcm/errors.hpp"
#include "rcm/numerics.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rcm {

std::string to_string(BoundaryMode mode)
{
    return mode == BoundaryMode::regional ? "regional" : "periodic";
}

BoundaryMode boundary_mode_from_string(const std::string& name)
{
    if (name == "regional") {
        return BoundaryMode::regional;
    }
    if (name == "periodic") {
        return BoundaryMode::periodic;
    }
    throw ConfigError("unknown boundary mode '" + name + "'");
}

double unit_sphere_area(int d) noexcept
{
    switch (d) {
    case 1:
        return 2.0;
    case 2:
        return 2.0 * M_PI;
    case 3:
        return 4.0 * M_PI;
    default:
        return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
    }
}

namespace {

double periodized_1d(double s, double j, double L)
{
    constexpr int N = 64;
    double sum = 0.0;
    for (int n = -N; n <= N; ++n) {
        sum += std::pow(std::abs(j + n * L), -s);
    }
    // Euler-Maclaurin for sum_{n > N} (nL +- j)^{-s}
    for (double shift : {j, -j}) {
        const double x = (N + 1) * L + shift;
        sum += std::pow(x, 1.0 - s) / ((s - 1.0) * L) + 0.5 * std::pow(x, -s) + s * L * std::pow(x, -s - 1.0) / 12.0;
    }
    return sum;
}

double periodized_2d(double s, double j0, double j1, double L)
{
    constexpr int N = 24;
    double sum = 0.0;
    for (int a = -N; a <= N; ++a) {
        for (int b = -N; b <= N; ++b) {
            const double x = j0 + a * L;
            const double y = j1 + b * L;
            sum += std::pow(x * x + y * y, -0.5 * s);
        }
    }
    // windings outside the square of half-width (N + 1/2) L, replaced by an integral
    const double half = (N + 0.5) * L;
    const double angular = integrate_adaptive([&](double th) { return std::pow(std::cos(th), s - 2.0); }, 0.0, M_PI / 4);
    sum += 8.0 * std::pow(half, 2.0 - s) / (s - 2.0) * angular / (L * L);
    return sum;
}

} // namespace

double periodized_kernel(int d, double alpha, const Point& j, std::int64_t L)
{
    const double s = d + alpha;
    const auto Ld = static_cast<double>(L);
    if (d == 1) {
        return periodized_1d(s, static_cast<double>(j[0]), Ld);
    }
    if (d == 2) {
        return periodized_2d(s, static_cast<double>(j[0]), static_cast<double>(j[1]), Ld);
    }
    throw std::invalid_argument("periodic kernels are implemented for d = 1, 2 only");
}

KernelTable::KernelTable(const Lattice& lattice, double alpha, BoundaryMode mode, std::optional<double> radius)
    : lattice_(lattice), alpha_(alpha), mode_(mode)
{
    if (!(alpha > 0.0 && alpha < 2.0)) {
        throw std::invalid_argument("kernel exponent alpha must lie in (0,2)");
    }
    const int d = lattice.dim();
    const double k = lattice.scale();
    const double s = d + alpha;
    const double kalpha = std::pow(k, alpha);
    const std::int64_t side = lattice.side();
    if (mode == BoundaryMode::periodic && d == 3) {
        throw std::invalid_argument("periodic kernels are implemented for d = 1, 2 only");
    }

    std::int64_t lo = -(side - 1);
    std::int64_t hi = side - 1;
    if (mode == BoundaryMode::periodic) {
        lo = -(side / 2);
        hi = side / 2;
        if (side % 2 == 1) {
            lo = -((side - 1) / 2);
            hi = (side - 1) / 2;
        }
    }
    const double diameter = std::sqrt(static_cast<double>(d)) * static_cast<double>(hi - lo) / k;
    if (radius && !(*radius > 0.0)) {
        throw std::invalid_argument("kernel radius must be positive");
    }
    radius_ = radius.value_or(diameter);

    const std::int64_t width = hi - lo + 1;
    std::int64_t count = 1;
    for (int c = 0; c < d; ++c) {
        count *= width;
    }
    std::map<Point, std::size_t> where;
    double dropped = 0.0;
    for (std::int64_t idx = 0; idx < count; ++idx) {
        Point j{};
        std::int64_t rest = idx;
        for (int c = d - 1; c >= 0; --c) {
            j[c] = lo + rest % width;
            rest /= width;
        }
        double n2 = 0.0;
        double mult = 1.0;
        for (int c = 0; c < d; ++c) {
            n2 += static_cast<double>(j[c] * j[c]);
            if (mode == BoundaryMode::periodic && side % 2 == 0 && 2 * std::abs(j[c]) == side) {
                mult *= 0.5;
            }
        }
        if (n2 == 0.0) {
            continue;
        }
        const double jn = std::sqrt(n2);
        const double direct = mult * kalpha * std::pow(jn, -s);
        double closure = 0.0;
        if (mode == BoundaryMode::periodic) {
            // evaluated at the representative of {j, -j} so that opposite offsets agree bit for bit
            Point rep = j;
            if (lex_less(j, Point{})) {
                for (int c = 0; c < d; ++c) {
                    rep[c] = -j[c];
                }
            }
            closure = mult * kalpha * (periodized_kernel(d, alpha, rep, side) - std::pow(jn, -s));
        }
        if (jn / k > radius_ * (1.0 + 1e-12)) {
            dropped += direct + closure;
            continue;
        }
        KernelOffset off;
        off.step = j;
        for (int c = 0; c < d; ++c) {
            off.z[c] = static_cast<double>(j[c]) / k;
        }
        off.length = jn / k;
        off.random = direct;
        off.closure = closure;
        where[j] = offsets_.size();
        offsets_.push_back(off);
        random_mass_ += direct;
        closure_mass_ += closure;
    }
    for (auto& off : offsets_) {
        Point neg{};
        for (int c = 0; c < d; ++c) {
            neg[c] = -off.step[c];
        }
        off.opposite = where.at(neg);
    }

    if (mode == BoundaryMode::periodic) {
        tail_mass_ = dropped;
    } else if (radius.has_value() && radius_ < diameter) {
        const double margin = radius_ - std::sqrt(static_cast<double>(d)) / k;
        if (!(margin > 0.0)) {
            std::ostringstream msg;
            msg << "kernel radius " << radius_ << " is below one grid cell at k=" << k;
            throw std::invalid_argument(msg.str());
        }
        tail_mass_ = unit_sphere_area(d) / alpha * std::pow(margin, -alpha);
    }
}

} // namespace rcm
