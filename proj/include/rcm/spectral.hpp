#pragma once

#include "rcm/lattice.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace rcm {

/// c_{d,alpha} = int_{R^d} (1 - cos u_1) |u|^{-d-alpha} du, by adaptive quadrature
/// (d = 1 directly, d = 2, 3 by radial reduction to the d = 1 value).
double stable_constant(int d, double alpha);

/// Index in `fine` of lattice site `site` of `coarse`, wrapped periodically.
/// The fine scale must be a multiple of the coarse one.
std::size_t torus_index(const Lattice& fine, const Lattice& coarse, std::size_t site);

/// Real-to-complex FFT on a lattice box viewed as a torus, with Fourier multipliers.
///
/// Owns its FFTW plans and buffers; plan creation is serialized across
/// threads. One instance must not be used from two threads at once.
class SpectralTorus {
public:
    explicit SpectralTorus(const Lattice& grid);
    ~SpectralTorus();
    SpectralTorus(const SpectralTorus&) = delete;
    SpectralTorus& operator=(const SpectralTorus&) = delete;
    SpectralTorus(SpectralTorus&&) noexcept;
    SpectralTorus& operator=(SpectralTorus&&) noexcept;

    const Lattice& grid() const noexcept { return grid_; }
    std::size_t modes() const noexcept { return modes_; }
    /// |xi| for each half-spectrum coefficient.
    std::span<const double> wavenumber_norms() const noexcept { return norms_; }
    /// xi_c for each half-spectrum coefficient.
    double wavenumber(std::size_t mode, int c) const noexcept { return wave_[mode * 3 + static_cast<std::size_t>(c)]; }

    void forward(std::span<const double> in, std::span<std::complex<double>> out);
    /// Inverse transform including the 1/n^d normalization.
    void backward(std::span<const std::complex<double>> in, std::span<double> out);

    /// out = F^{-1}[ m(|xi|) F[in] ].
    void apply_radial(std::span<const double> in, std::span<double> out, const std::function<double(double)>& m);

    /// L-bar g: multiplier -K c_{d,alpha} |xi|^alpha.
    void fractional(std::span<const double> in, std::span<double> out, double alpha, double K);

    /// Spectral partial derivative along coordinate c.
    void derivative(std::span<const double> in, std::span<double> out, int c);

private:
    struct Plans;
    Lattice grid_;
    std::size_t modes_ = 0;
    std::vector<double> norms_;
    std::vector<double> wave_;
    std::unique_ptr<Plans> plans_;
};

/// Bar-continuum operator: -K c_{d,alpha} |xi|^alpha applied to a real field
/// on the torus.
std::vector<double> apply_bar_continuum(const Lattice& grid, std::span<const double> g, double alpha, double K);

} // namespace rcm
