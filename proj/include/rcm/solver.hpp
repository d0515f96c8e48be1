#pragma once

#include "rcm/lattice.hpp"
#include "rcm/operators.hpp"
#include "rcm/spectral.hpp"
#include "rcm/testfn.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rcm {

enum class Scheme { euler, heun };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct SolveParams {
    double T = 1.0;
    double cfl_fraction = 0.5;
    /// Snapshot count after t = 0; step counts are rounded up to a multiple of it.
    int snapshots = 32;
    Scheme scheme = Scheme::euler;
    std::optional<double> dt_override;
};

struct StepPlan {
    double dt = 0.0;
    std::size_t steps = 0;
    std::size_t stride = 0;
    double max_rate = 0.0;
};

/// dt <= cfl_fraction / S_max with T / dt an integer multiple of the snapshot count.
StepPlan cfl_dt(const JumpOperator& op, const SolveParams& params);

struct Trajectory {
    std::vector<double> times;
    std::vector<Field> states;
    /// sum u mu per snapshot.
    std::vector<double> mass;
    double dt = 0.0;
    std::size_t steps = 0;
    Scheme scheme = Scheme::euler;
    std::string note;

    const Field& final_state() const { return states.back(); }
};

/// h(t) evaluated at every lattice site.
using SourceSampler = std::function<void(double t, std::span<double> out)>;

/// Explicit time stepping of d/dt u = L_t u + h(t), u(0) = g.
Trajectory solve_parabolic(const JumpOperator& op, const Field& g, const SourceSampler& h, const SolveParams& params);

/// Same, on a source term cached on a torus grid commensurate with the lattice.
Trajectory solve_parabolic(const JumpOperator& op, const Field& g, const SourceTerm& h, const SolveParams& params);

/// Exponential integrator on the torus for d/dt u = L-bar u + h:
///   u^(t+dt) = e^{m dt} u^ + dt e^{m dt / 2} h^(t + dt/2).
/// Default step count: 8 per snapshot interval.
Trajectory solve_limit(const Lattice& grid, std::span<const double> g, const SourceTerm* h, double alpha, double K,
                       const SolveParams& params);

/// Value at x of the piecewise-constant extension: the cell (z, z + 1/k]^d belongs to z.
/// Points outside the box give 0.
double extend_piecewise_constant(const Field& f, const Vec& x, int component = 0);

/// Step-size order estimate from three runs at dt, dt/2, dt/4:
/// order = log2(|u1 - u2| / |u2 - u4|), error(u4) ~ |u2 - u4| / (2^order - 1).
struct RichardsonEstimate {
    double order = 0.0;
    double error = 0.0;
    double difference_coarse = 0.0;
    double difference_fine = 0.0;
};
RichardsonEstimate richardson(const Field& coarse, const Field& mid, const Field& fine);

/// sup-norm of a - b.
double sup_distance(const Field& a, const Field& b);

} // namespace rcm
