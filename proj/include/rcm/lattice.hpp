#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rcm {

/// Integer grid coordinates. Unused trailing dimensions stay zero.
using Point = std::array<std::int64_t, 3>;
using Vec = std::array<double, 3>;

inline constexpr int kMaxDim = 3;

/// A box x0 + (-R, R]^d intersected with the grid k^{-1} Z^d.
///
/// Sites are addressed by integer grid coordinates p (position p / k) and by
/// a flat row-major index running from the lowest coordinate upwards, last
/// dimension fastest. Nothing but the box description is stored; site lists
/// are generated on demand.
class Lattice {
public:
    /// `center` is given in grid units and must be a grid point.
    Lattice(int d, int k, double R, Point center = {});

    /// B_r(center) on Z^d (k = 1, integer half-width).
    static Lattice integer_box(int d, std::int64_t r, Point center = {});

    int dim() const noexcept { return d_; }
    int scale() const noexcept { return k_; }
    double half_width() const noexcept { return R_; }
    const Point& center() const noexcept { return center_; }

    /// Sites per dimension, 2Rk.
    std::int64_t side() const noexcept { return side_; }
    std::size_t size() const noexcept { return size_; }

    /// mu^{(k)} of a single site.
    double cell_measure() const noexcept { return cell_; }
    double total_measure() const noexcept { return cell_ * static_cast<double>(size_); }

    /// Lowest grid coordinate in each used dimension.
    const Point& lower() const noexcept { return lower_; }

    Point grid_point(std::size_t index) const;
    Vec position(std::size_t index) const;
    bool contains(const Point& p) const noexcept;
    std::size_t index(const Point& p) const;
    std::optional<std::size_t> find(const Point& p) const noexcept;

    /// Periodic wrap of a grid point into the box.
    Point wrap(const Point& p) const noexcept;

    bool same_geometry(const Lattice& other) const noexcept;

private:
    int d_;
    int k_;
    double R_;
    Point center_;
    Point lower_{};
    std::int64_t side_;
    std::size_t size_;
    double cell_;
};

/// A scalar or R^n-valued function on the sites of a lattice.
/// Values are stored component-major: values[c * size + site].
struct Field {
    Lattice lattice;
    int components = 1;
    double time = 0.0;
    std::vector<double> values;

    Field(Lattice lat, int ncomp = 1, double t = 0.0);

    std::size_t size() const noexcept { return lattice.size(); }
    double& at(std::size_t site, int c = 0) { return values[static_cast<std::size_t>(c) * size() + site]; }
    double at(std::size_t site, int c = 0) const { return values[static_cast<std::size_t>(c) * size() + site]; }
    std::span<double> component(int c);
    std::span<const double> component(int c) const;
};

/// One cube B_{2^n}(z) of the dyadic decomposition of B_{2^m}.
struct DyadicBlock {
    int m = 0;
    int n = 0;
    Point center{};
    std::int64_t extent = 1; ///< half-width 2^n

    Lattice box(int d) const { return Lattice::integer_box(d, extent, center); }
};

/// Centers Z^d_{m,n}: coordinates are odd multiples of 2^n inside B_{2^m};
/// {0} when m == n.
std::vector<DyadicBlock> dyadic_blocks(int d, int m, int n);

/// Flat indices (in `outer`) of the sites of `inner`. Every site of `inner`
/// must belong to `outer`.
std::vector<std::size_t> sites_of(const Lattice& outer, const Lattice& inner);

/// Normalized sum (1/|U|) sum_{x in U} f(x).
double block_average(std::span<const double> f, std::span<const std::size_t> sites);
double block_average(const Field& f, std::span<const std::size_t> sites, int component = 0);

/// Sum of f against mu^{(k)}.
double integrate(const Field& f, int component = 0);

} // namespace rcm
