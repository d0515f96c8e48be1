#pragma once

#include "rcm/lattice.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rcm {

enum class BoundaryMode {
    /// Jumps leaving the box are suppressed (censored operator).
    regional,
    /// Offsets wrap around the box; the box is a torus.
    periodic,
};

std::string to_string(BoundaryMode mode);
BoundaryMode boundary_mode_from_string(const std::string& name);

/// One jump offset on the scale-k grid.
///
/// The rate attached to a bond (x, x+step) at time s is
///   random * w(s, x, x+step) + closure * K(s),
/// where `random` = multiplicity * k^alpha |step|^{-d-alpha} and `closure`
/// carries the mean-weighted contribution of periodic windings.
struct KernelOffset {
    Point step{};      ///< grid units
    Vec z{};           ///< continuum displacement step / k
    double length = 0; ///< |z|
    double random = 0;
    double closure = 0;
    std::size_t opposite = 0; ///< index of -step
};

/// Jump offsets and weights k^{-d}|z|^{-d-alpha} for one lattice.
///
/// Regional mode: every in-box displacement with |z| <= radius.
/// Periodic mode: minimal images with coordinates in [-side/2, side/2];
/// on even sides the two images at +-side/2 carry multiplicity 1/2 per
/// coordinate, and the remaining windings are lumped into `closure`.
class KernelTable {
public:
    /// `radius` in continuum units; default keeps every admissible offset.
    KernelTable(const Lattice& lattice, double alpha, BoundaryMode mode, std::optional<double> radius = std::nullopt);

    const Lattice& lattice() const noexcept { return lattice_; }
    double alpha() const noexcept { return alpha_; }
    BoundaryMode mode() const noexcept { return mode_; }
    const std::vector<KernelOffset>& offsets() const noexcept { return offsets_; }
    std::size_t size() const noexcept { return offsets_.size(); }

    /// Total random (resp. closure) coefficient over offsets.
    double random_mass() const noexcept { return random_mass_; }
    double closure_mass() const noexcept { return closure_mass_; }
    double retained_mass() const noexcept { return random_mass_ + closure_mass_; }
    /// Upper bound on the discarded sum_{|z| > radius} k^{-d}|z|^{-d-alpha}.
    double tail_mass() const noexcept { return tail_mass_; }
    double radius() const noexcept { return radius_; }

private:
    Lattice lattice_;
    double alpha_;
    BoundaryMode mode_;
    double radius_;
    std::vector<KernelOffset> offsets_;
    double random_mass_ = 0.0;
    double closure_mass_ = 0.0;
    double tail_mass_ = 0.0;
};

/// sum_{n in Z^d} |j + n L|^{-d-alpha} for an integer offset j != 0 mod L
/// (d = 1 or 2; Euler-Maclaurin / angular-integral tail).
double periodized_kernel(int d, double alpha, const Point& j, std::int64_t L);

/// Surface area of the unit sphere in R^d.
double unit_sphere_area(int d) noexcept;

} // namespace rcm
