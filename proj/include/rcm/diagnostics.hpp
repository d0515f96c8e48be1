#pragma once

#include "rcm/environment.hpp"
#include "rcm/kernel.hpp"
#include "rcm/lattice.hpp"
#include "rcm/numerics.hpp"
#include "rcm/solver.hpp"
#include "rcm/testfn.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rcm {

/// Least squares of log(value) against log(scale).
struct RateFit {
    std::vector<double> scales;
    std::vector<double> values;
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
    /// Points dropped because their value was not positive.
    std::size_t excluded = 0;
};

/// Needs at least three positive points with strictly increasing scales.
RateFit fit_rate(std::span<const double> scales, std::span<const double> values);

/// |{z in B_r(y) minus {x1,x2}: w(t,x1,z) >= delta and w(t,x2,z) >= delta}| / |B_r(y)|.
double good_vertex_fraction(const Environment& env, int d, double t, const Point& x1, const Point& x2, const Point& y,
                            std::int64_t r, double delta);

struct GoodVertexStats {
    double delta = 0.0;
    std::int64_t r = 0;
    std::size_t samples = 0;
    double min_fraction = 1.0;
    double mean_fraction = 0.0;
};

/// Fractions at `samples` random (t, x1, x2, y) with t in [0, t_max] and x1, x2, y in B_{4r}.
GoodVertexStats good_vertex_survey(const Environment& env, int d, std::int64_t r, double delta, std::size_t samples,
                                   double t_max, std::uint64_t seed);

/// [avg f^2 - (avg f)^2] / [r^{alpha-d} E_{t,B_r(y)}(f,f)] with f given on B_r(y).
/// 0 when both sides vanish, +infinity when only the energy does.
double poincare_ratio(const Environment& env, int d, double alpha, double t, const Point& y, std::int64_t r,
                      std::span<const double> f);

struct MultiscaleGap {
    double lhs = 0.0;
    double block_term = 0.0;
    double energy_term = 0.0;
    /// (lhs - block_term) / energy_term, or 0 when the energy term vanishes.
    double constant = 0.0;
};

/// The three sides of the multi-scale Poincare inequality on B_{2^m} with blocks of level n <= m.
MultiscaleGap multiscale_poincare_gap(const Environment& env, int d, double alpha, double t, int m, int n,
                                      std::span<const double> f, std::span<const double> g);

/// One row of a deterministic operator-gap sweep on the torus (-R, R]^d.
struct BarGapRow {
    int k = 0;
    /// int_0^T sum_x |Lbar^k_t f - Lbar f|^2 mu^(k) dt.
    double gap = 0.0;
    /// T pi(k^alpha T) sum_x |Lbar^k_1 f|^2 mu^(k), the exact time-averaging part.
    double pi_part = 0.0;
    /// 2K int (K(k^alpha t) - K) dt <A_k f, A_k f - Lbar_1 f>: the interaction of the
    /// averaging and spatial errors; |cross| <= 2K T sqrt(pi) ||A_k f|| ||A_k f - Lbar_1 f||.
    double cross = 0.0;
    /// pi_part + cross = T pi(k^alpha T) * calibration; zero under a constant profile.
    double calibration = 0.0;
    /// gap - pi_part - cross.
    double residual = 0.0;
};

struct BarGap {
    std::vector<BarGapRow> rows;
    /// Fit of the residual (the gap itself under a constant profile); empty scales when
    /// fewer than three residuals are positive.
    RateFit fit;
};

/// Compares the bar-discrete operator (periodic, scale k) with the continuum
/// fractional operator (spectral, on a grid of scale `reference_scale`) for a
/// time-constant profile f.
BarGap operator_gap_bar(const SmoothProfile& f, std::span<const int> k_list, double T, double alpha,
                        const MeanProfile& profile, double half_width, int reference_scale);

enum class GapVariant { scaled, hat };

/// int_0^T sum_x |L^k_t f - Lbar^k_t f|^2 mu^(k) dt (or the hat form of L^k) on the periodic box (-R, R]^d.
/// Time quadrature: `panels` Gauss-Legendre panels of three nodes; default one per half unit of environment time.
double operator_gap_random(const Environment& env, const SmoothProfile& f, int k, double T, double alpha,
                           GapVariant variant, double half_width, int panels = 0);

struct CutoffGap {
    std::vector<double> radii;
    std::vector<double> gaps;
    /// NaN slope when fewer than three gaps are positive (f supported inside R/2).
    RateFit fit;
};

/// G(R) = int |Lbar f - Lbar(f psi_R)|^2 dx on the spectral torus (-H, H]^d with `points_per_unit` grid points per unit.
CutoffGap cutoff_gap(const SmoothProfile& f, std::span<const double> radii, double alpha, double K, double half_width,
                     int points_per_unit);

struct SupL2Error {
    /// max over snapshots of the L^2(R^d) distance
    double value = 0.0;
    std::vector<double> per_snapshot;
    /// L^2 norm of the reference outside the u_k box (max over snapshots).
    double leaked = 0.0;
};

/// Distance between a lattice trajectory u_k and a reference trajectory on a
/// finer commensurate torus grid; snapshot times must coincide.
SupL2Error sup_l2_error(const Trajectory& u_k, const Trajectory& u_bar);

} // namespace rcm
