#pragma once

#include "rcm/environment.hpp"
#include "rcm/lattice.hpp"
#include "rcm/numerics.hpp"
#include "rcm/solver.hpp"

#include <optional>
#include <vector>

namespace rcm {

/// A truncated first-moment sum and the bound on what the truncation dropped.
struct DriftValue {
    Vec value{};
    double tail_bound = 0.0;
};

/// C1 * sum_{|z| > radius} |z|^{1-d-alpha} for alpha > 1, bounded by the
/// integral over |y| > radius - sqrt(d)/2 of (|y| - sqrt(d)/2)^{1-d-alpha}.
double drift_tail_bound(int d, double alpha, double w_bound, double radius);

/// sum_{0 < |z| <= radius} z |z|^{-d-alpha} w(t, x, x+z); requires alpha in (1,2).
/// The sum pairs z with -z, so symmetric environments give exactly zero.
DriftValue drift_field_V(const Environment& env, int d, double alpha, double t, const Point& x, double radius);

/// Same sum restricted to |z| <= 2^m, any alpha in (0,2).
Vec drift_field_Vm(const Environment& env, int d, double alpha, double t, const Point& x, int m);

struct CorrectorParams {
    /// Horizon in units of 2^{m alpha}.
    double T = 1.0;
    double cfl_fraction = 0.5;
    int snapshots = 32;
    /// Truncation radius of V for alpha > 1; default 2^{m+1}.
    std::optional<double> drift_radius;
    /// Keep the energy at every step (tests only; memory grows with the step count).
    bool record_step_energy = false;
};

/// phi_m on B_{2^m}: d components, phi(0) = 0, sum_x phi = 0 componentwise.
struct CorrectorRun {
    int m = 0;
    int d = 1;
    double alpha = 1.0;
    double horizon = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;
    double drift_radius = 0.0;
    double drift_tail = 0.0;

    std::vector<double> times;
    std::vector<Field> states;
    /// int_0^t E(phi, phi) ds at each snapshot (trapezoid rule over steps).
    std::vector<double> energy_integral;
    /// sum_x |phi(t,x)|^2 at each snapshot.
    std::vector<double> l2_squared;
    /// max_c |sum_x phi_c| / ||phi|| at each snapshot, 0 when phi = 0.
    std::vector<double> mean_defect;
    std::size_t reprojections = 0;
    std::vector<double> step_energy;

    double sup_l2_squared() const;
    double total_energy() const { return energy_integral.empty() ? 0.0 : energy_integral.back(); }
    /// Snapshot of phi at time s by linear interpolation between snapshots.
    Field at(double s) const;
};

/// Explicit Euler for d/dt phi = L_{t,B} phi + V - avg_B V on B = B_{2^m}, horizon 2^{m alpha} T.
/// alpha > 1 uses V truncated at the drift radius, alpha <= 1 uses V_m.
CorrectorRun solve_corrector(const Environment& env, int d, double alpha, int m, const CorrectorParams& params);

/// 2^{m(alpha+d)} T for alpha > 1, 2^{m(d+1)} T at alpha = 1, 2^{m(d + 2(1-alpha) + alpha)} T below.
double corrector_normalization(int d, double alpha, int m, double T);

struct CorrectorScalingRow {
    int m = 0;
    double sup_l2 = 0.0;
    double energy = 0.0;
    double Q = 0.0;
};

struct CorrectorScaling {
    std::vector<CorrectorScalingRow> rows;
    /// log Q against log m; zero slope when every Q vanishes.
    LineFit fit;
    /// max Q / min Q over levels (1 when all vanish).
    double blowup = 1.0;
};

/// Needs at least three levels, sorted by m.
CorrectorScaling corrector_scaling_report(const std::vector<CorrectorRun>& runs, double T);

/// v_k(t) = u psi_R + k^{-1} <grad(u psi_R), phi(k^alpha t, k x)> with R = k^theta,
/// on the lattice of `u` (scale k). phi outside its box counts as 0.
Field build_two_scale(const Field& u, const Field& grad_u, const CorrectorRun& phi, double alpha, double theta,
                      double t);

} // namespace rcm
