#pragma once

#include "rcm/environment.hpp"
#include "rcm/kernel.hpp"
#include "rcm/lattice.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rcm {

enum class OperatorFamily { scaled, regional, bar_discrete };

std::string to_string(OperatorFamily family);

/// Jump operator on a finite lattice driven by a conductance field:
///
///   (L_t f)(x) = sum_o rate(t, x, o) (f(x + z_o) - f(x)),
///   rate(t, x, o) = random_o w(k^alpha t, kx, kx + step_o) + closure_o K(k^alpha t).
///
/// The scaled family evaluates the environment at k^alpha t and grid points
/// kx. The regional family is the same operator on an integer box (k = 1).
/// The bar-discrete family replaces w by the mean profile and shares the code
/// path with the scaled one, so a constant environment gives identical bits.
class JumpOperator {
public:
    JumpOperator(const Lattice& lattice, double alpha, Environment env, BoundaryMode mode,
                 std::optional<double> radius = std::nullopt);

    static JumpOperator scaled(const Lattice& lattice, double alpha, Environment env, BoundaryMode mode,
                               std::optional<double> radius = std::nullopt);
    static JumpOperator bar_discrete(const Lattice& lattice, double alpha, const MeanProfile& profile,
                                     BoundaryMode mode, std::optional<double> radius = std::nullopt);
    /// L_{t,U}: integer box U, jumps confined to U, unscaled time.
    static JumpOperator regional(const Lattice& box, double alpha, Environment env);

    OperatorFamily family() const noexcept { return family_; }
    const Lattice& lattice() const noexcept { return table_->lattice(); }
    const KernelTable& kernel() const noexcept { return *table_; }
    const Environment& environment() const noexcept { return env_; }
    double alpha() const noexcept { return table_->alpha(); }
    /// Environment time per unit of operator time, k^alpha.
    double time_scale() const noexcept { return time_scale_; }

    /// Largest off-diagonal row sum over all sites and times.
    double max_rate() const noexcept;

    /// Flat index of x + z_o or -1 when the jump leaves a regional box.
    std::int32_t neighbor(std::size_t site, std::size_t offset) const noexcept
    {
        return neighbors_[site * table_->size() + offset];
    }

    /// rate(t, x, o) for a single bond.
    double rate(double t, std::size_t site, std::size_t offset) const;

    void apply(double t, std::span<const double> f, std::span<double> out) const;
    /// Componentwise application; every component sees the same weights.
    Field apply(double t, const Field& f) const;

    /// Non-divergence variant: subtracts <grad f(x), z> chi(z) inside the sum,
    /// chi = 1_{|z| <= 1} for alpha <= 1 and chi = 1 for alpha > 1.
    /// `grad` carries d components on the same lattice.
    Field apply_hat(double t, const Field& f, const Field& grad) const;

    /// (1/2) sum_x sum_o rate (f(x+z_o) - f(x))^2, so that
    /// -sum_x f(x) (L f)(x) equals the energy.
    double energy(double t, std::span<const double> f) const;
    double energy(double t, const Field& f) const;

private:
    struct BondCache;
    struct Weights;

    Weights weights(double t) const;
    std::shared_ptr<const std::vector<double>> bond_draws(const RandomSource& source) const;

    OperatorFamily family_;
    std::shared_ptr<const KernelTable> table_;
    Environment env_;
    double time_scale_;
    std::vector<std::int32_t> neighbors_;
    /// Bond canonical for the pair it represents.
    std::vector<std::uint8_t> canonical_;
    std::shared_ptr<BondCache> cache_;
};

/// chi_alpha(|z|) of the compensator.
double compensator_indicator(double alpha, double length) noexcept;

/// Dirichlet energy (1/2) sum_{x != y in U} (f(x)-f(y))^2 w(t,x,y) |x-y|^{-d-alpha}
/// computed pair by pair from the environment (independent of JumpOperator).
double dirichlet_energy(const Environment& env, const Lattice& box, double alpha, double t, std::span<const double> f);

} // namespace rcm
