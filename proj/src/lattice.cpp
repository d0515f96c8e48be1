#include "rcm/lattice.hpp"

#include "rcm/errors.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rcm {

Lattice::Lattice(int d, int k, double R, Point center)
    : d_(d), k_(k), R_(R), center_(center)
{
    if (d < 1 || d > kMaxDim) {
        throw std::invalid_argument("lattice dimension must be 1, 2 or 3");
    }
    if (k < 1) {
        throw std::invalid_argument("lattice scale k must be >= 1");
    }
    const double sides = 2.0 * R * k;
    const double rounded = std::round(sides);
    if (!(R > 0.0) || std::abs(sides - rounded) > 1e-9 * std::max(1.0, sides) || rounded < 1.0) {
        std::ostringstream msg;
        msg << "2Rk must be a positive integer (R=" << R << ", k=" << k << ", 2Rk=" << sides << ")";
        throw ConfigError(msg.str());
    }
    side_ = static_cast<std::int64_t>(rounded);
    const auto lo = static_cast<std::int64_t>(std::floor(-R * k + 1e-9)) + 1;
    size_ = 1;
    for (int c = 0; c < d; ++c) {
        lower_[c] = center[c] + lo;
        size_ *= static_cast<std::size_t>(side_);
    }
    for (int c = d; c < kMaxDim; ++c) {
        center_[c] = 0;
    }
    cell_ = std::pow(static_cast<double>(k), -d);
}

Lattice Lattice::integer_box(int d, std::int64_t r, Point center)
{
    if (r < 1) {
        throw std::invalid_argument("integer box radius must be >= 1");
    }
    return Lattice(d, 1, static_cast<double>(r), center);
}

Point Lattice::grid_point(std::size_t index) const
{
    Point p{};
    for (int c = d_ - 1; c >= 0; --c) {
        p[c] = lower_[c] + static_cast<std::int64_t>(index % static_cast<std::size_t>(side_));
        index /= static_cast<std::size_t>(side_);
    }
    return p;
}

Vec Lattice::position(std::size_t index) const
{
    const Point p = grid_point(index);
    Vec x{};
    for (int c = 0; c < d_; ++c) {
        x[c] = static_cast<double>(p[c]) / k_;
    }
    return x;
}

bool Lattice::contains(const Point& p) const noexcept
{
    for (int c = 0; c < d_; ++c) {
        if (p[c] < lower_[c] || p[c] >= lower_[c] + side_) {
            return false;
        }
    }
    return true;
}

std::size_t Lattice::index(const Point& p) const
{
    auto idx = find(p);
    if (!idx) {
        throw std::out_of_range("grid point outside lattice");
    }
    return *idx;
}

std::optional<std::size_t> Lattice::find(const Point& p) const noexcept
{
    if (!contains(p)) {
        return std::nullopt;
    }
    std::size_t idx = 0;
    for (int c = 0; c < d_; ++c) {
        idx = idx * static_cast<std::size_t>(side_) + static_cast<std::size_t>(p[c] - lower_[c]);
    }
    return idx;
}

Point Lattice::wrap(const Point& p) const noexcept
{
    Point q = p;
    for (int c = 0; c < d_; ++c) {
        std::int64_t r = (p[c] - lower_[c]) % side_;
        if (r < 0) {
            r += side_;
        }
        q[c] = lower_[c] + r;
    }
    return q;
}

bool Lattice::same_geometry(const Lattice& other) const noexcept
{
    return d_ == other.d_ && k_ == other.k_ && side_ == other.side_ && lower_ == other.lower_;
}

Field::Field(Lattice lat, int ncomp, double t)
    : lattice(std::move(lat)), components(ncomp), time(t),
      values(lattice.size() * static_cast<std::size_t>(ncomp), 0.0)
{
    if (ncomp < 1) {
        throw std::invalid_argument("field needs at least one component");
    }
}

std::span<double> Field::component(int c)
{
    return {values.data() + static_cast<std::size_t>(c) * size(), size()};
}

std::span<const double> Field::component(int c) const
{
    return {values.data() + static_cast<std::size_t>(c) * size(), size()};
}

std::vector<DyadicBlock> dyadic_blocks(int d, int m, int n)
{
    if (n < 0 || n > m) {
        throw std::invalid_argument("dyadic_blocks requires 0 <= n <= m");
    }
    if (d < 1 || d > kMaxDim) {
        throw std::invalid_argument("dyadic_blocks: dimension must be 1, 2 or 3");
    }
    const std::int64_t extent = std::int64_t{1} << n;
    if (m == n) {
        return {DyadicBlock{m, n, Point{}, extent}};
    }
    // odd multiples of 2^n in (-2^m, 2^m]
    std::vector<std::int64_t> coords;
    const std::int64_t half = std::int64_t{1} << m;
    for (std::int64_t j = -(half / extent); j <= half / extent; ++j) {
        if ((j % 2) != 0) {
            const std::int64_t v = j * extent;
            if (v > -half && v <= half) {
                coords.push_back(v);
            }
        }
    }
    std::vector<DyadicBlock> blocks;
    std::size_t total = 1;
    for (int c = 0; c < d; ++c) {
        total *= coords.size();
    }
    blocks.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        Point z{};
        std::size_t rest = idx;
        for (int c = d - 1; c >= 0; --c) {
            z[c] = coords[rest % coords.size()];
            rest /= coords.size();
        }
        blocks.push_back(DyadicBlock{m, n, z, extent});
    }
    return blocks;
}

std::vector<std::size_t> sites_of(const Lattice& outer, const Lattice& inner)
{
    if (outer.dim() != inner.dim() || outer.scale() != inner.scale()) {
        throw std::invalid_argument("sites_of: lattices must share dimension and scale");
    }
    std::vector<std::size_t> out;
    out.reserve(inner.size());
    for (std::size_t i = 0; i < inner.size(); ++i) {
        out.push_back(outer.index(inner.grid_point(i)));
    }
    return out;
}

double block_average(std::span<const double> f, std::span<const std::size_t> sites)
{
    if (sites.empty()) {
        throw std::invalid_argument("block_average: empty block");
    }
    double sum = 0.0;
    for (std::size_t s : sites) {
        if (s >= f.size()) {
            throw std::invalid_argument("block_average: site outside field");
        }
        sum += f[s];
    }
    return sum / static_cast<double>(sites.size());
}

double block_average(const Field& f, std::span<const std::size_t> sites, int component)
{
    return block_average(f.component(component), sites);
}

double integrate(const Field& f, int component)
{
    double sum = 0.0;
    for (double v : f.component(component)) {
        sum += v;
    }
    return sum * f.lattice.cell_measure();
}

} // namespace rcm
