#pragma once

#include "rcm/lattice.hpp"
#include "rcm/spectral.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rcm {

/// Value and derivatives up to third order of a function on R^d (d <= 3).
struct Jet {
    double value = 0.0;
    std::array<double, 3> grad{};
    std::array<std::array<double, 3>, 3> hess{};
    std::array<std::array<std::array<double, 3>, 3>, 3> third{};

    Jet operator*(const Jet& other) const;
    Jet& operator*=(double s);
};

/// Radial profile A F(|x - c|^2) times an optional factor cos(omega x_1 + phase).
struct SmoothProfile {
    enum class Kind {
        /// exp(1 - 1/(1 - s/r^2)) inside radius r, zero outside.
        compact_bump,
        /// exp(-s / r^2).
        gaussian,
        /// (1 + s)^{-(d + beta)/2}.
        polynomial_decay,
    };

    Kind kind = Kind::compact_bump;
    int d = 1;
    double amplitude = 1.0;
    Vec center{};
    double radius = 1.0; ///< bump radius or gaussian width
    double beta = 1.0;   ///< polynomial_decay only
    double omega = 0.0;  ///< modulation frequency; 0 disables it
    double phase = 0.0;

    Jet jet(const Vec& x) const;
    double operator()(const Vec& x) const { return jet(x).value; }
    /// Radius beyond which the profile vanishes; +infinity unless compact.
    double support_radius() const noexcept;
    std::string describe() const;
};

SmoothProfile::Kind profile_kind_from_string(const std::string& name);
std::string to_string(SmoothProfile::Kind kind);

/// Initial datum g: the profile must have compact support.
SmoothProfile make_initial_g(const SmoothProfile& profile);

/// Decay certificate sup_x |nabla^i f(x)| (1 + |x|)^{d + beta}, i = 0..3,
/// over a log-spaced radial grid along each coordinate axis and diagonal.
struct DecayCertificate {
    double constant = 0.0;
    double radius_max = 0.0;
    bool decays = true;
};
DecayCertificate decay_certificate(const SmoothProfile& profile, double beta);

/// psi_R(x) = psi(|x|/R): 1 for |x| <= R/2, 0 for |x| >= R, quintic C^2 bridge.
Jet cutoff_psi(double R, const Vec& x, int d);
/// The one-dimensional bridge psi(r).
double cutoff_profile(double r) noexcept;

/// A source h(t, x) on a periodic grid together with the function f(t, x)
/// it was built from, so that solving d/dt u = L-bar u + h, u(0) = f(0)
/// reproduces f.
///
/// h is cached on uniform time nodes and interpolated by cubic Lagrange
/// polynomials; f is evaluated exactly.
class SourceTerm {
public:
    const Lattice& grid() const noexcept { return grid_; }
    double horizon() const noexcept { return T_; }
    double alpha() const noexcept { return alpha_; }
    double mean() const noexcept { return K_; }
    std::size_t nodes() const noexcept { return h_nodes_.size(); }
    /// Decay constant of f certified at construction (beta = infinity: sup |f| on the support).
    double decay_constant() const noexcept { return decay_C0_; }
    const std::string& description() const noexcept { return description_; }

    /// h(t) on the torus grid.
    void sample(double t, std::span<double> out) const;
    /// h(t) at the sites of a lattice commensurate with the grid.
    void sample(double t, const Lattice& lattice, std::span<double> out) const;
    /// f(t) on the torus grid.
    void target(double t, std::span<double> out) const;
    /// f(0) on the grid.
    std::vector<double> initial() const;

    /// h = 0, f = g.
    static SourceTerm zero(const Lattice& grid, double alpha, double K, double T, const SmoothProfile& g);

    /// f(t, x) = (a0 + a1 t) p(x): h = a1 p - (a0 + a1 t) L-bar p.
    static SourceTerm modulated(const Lattice& grid, double alpha, double K, double T, const SmoothProfile& p,
                                double a0, double a1, double beta, int nodes = 128);

    /// Compactly supported member: f = phi(|x| - n) (P_t g + int_0^t P_{t-s} q ds) with
    /// phi = 1 on r <= 1, 0 on r >= 2 and a time-constant q (omit for q = 0).
    static SourceTerm cutoff_duhamel(const Lattice& grid, double alpha, double K, double T, const SmoothProfile& g,
                                     std::optional<SmoothProfile> q, double n, int nodes = 128);

private:
    explicit SourceTerm(const Lattice& grid) : grid_(grid) {}
    void build_nodes(int nodes, const std::function<void(double, std::span<double>)>& exact_h);

    Lattice grid_;
    double T_ = 0.0;
    double alpha_ = 1.0;
    double K_ = 1.0;
    double decay_C0_ = 0.0;
    std::string description_;
    std::vector<std::vector<double>> h_nodes_;
    std::shared_ptr<const std::function<void(double, std::span<double>)>> target_;
};

/// Samples a profile at lattice sites.
Field sample_profile(const Lattice& lattice, const SmoothProfile& p);
std::vector<double> sample_values(const Lattice& lattice, const SmoothProfile& p);
/// Gradient of a profile at lattice sites (d components).
Field sample_gradient(const Lattice& lattice, const SmoothProfile& p);

} // namespace rcm
