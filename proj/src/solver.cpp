#include "rcm/solver.hpp"

#include "rcm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace rcm {

std::string to_string(Scheme scheme)
{
    return scheme == Scheme::euler ? "euler" : "heun";
}

Scheme scheme_from_string(const std::string& name)
{
    if (name == "euler") {
        return Scheme::euler;
    }
    if (name == "heun") {
        return Scheme::heun;
    }
    throw ConfigError("unknown time stepping scheme '" + name + "'");
}

namespace {

void check_params(const SolveParams& params)
{
    if (!(params.T > 0.0) || !std::isfinite(params.T)) {
        throw std::invalid_argument("solve horizon T must be positive");
    }
    if (!(params.cfl_fraction > 0.0 && params.cfl_fraction <= 1.0)) {
        throw std::invalid_argument("cfl_fraction must lie in (0,1]");
    }
    if (params.snapshots < 1) {
        throw std::invalid_argument("at least one snapshot is required");
    }
}

std::size_t round_up(std::size_t steps, std::size_t multiple)
{
    return ((steps + multiple - 1) / multiple) * multiple;
}

double lattice_mass(const Field& f)
{
    return integrate(f);
}

void check_finite(std::span<const double> u, std::size_t step)
{
    for (double v : u) {
        if (!std::isfinite(v)) {
            throw NumericalError("non-finite value at step " + std::to_string(step));
        }
    }
}

} // namespace

StepPlan cfl_dt(const JumpOperator& op, const SolveParams& params)
{
    check_params(params);
    StepPlan plan;
    plan.max_rate = op.max_rate();
    const auto snaps = static_cast<std::size_t>(params.snapshots);
    if (params.dt_override) {
        const double dt = *params.dt_override;
        if (!(dt > 0.0)) {
            throw std::invalid_argument("dt_override must be positive");
        }
        if (dt * plan.max_rate > 1.0) {
            std::ostringstream msg;
            msg << "dt_override " << dt << " violates the stability limit 1/S_max with S_max = " << plan.max_rate;
            throw NumericalError(msg.str());
        }
        plan.steps = round_up(static_cast<std::size_t>(std::ceil(params.T / dt - 1e-9)), snaps);
    } else {
        const double raw = params.T * plan.max_rate / params.cfl_fraction;
        plan.steps = round_up(std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw - 1e-9))), snaps);
    }
    plan.dt = params.T / static_cast<double>(plan.steps);
    plan.stride = plan.steps / snaps;
    return plan;
}

Trajectory solve_parabolic(const JumpOperator& op, const Field& g, const SourceSampler& h, const SolveParams& params)
{
    if (!op.lattice().same_geometry(g.lattice)) {
        throw std::invalid_argument("initial datum is not on the operator lattice");
    }
    const StepPlan plan = cfl_dt(op, params);
    const std::size_t N = g.size();
    const int comps = g.components;

    Trajectory traj;
    traj.dt = plan.dt;
    traj.steps = plan.steps;
    traj.scheme = params.scheme;
    traj.times.push_back(0.0);
    traj.states.push_back(g);
    traj.states.back().time = 0.0;
    traj.mass.push_back(lattice_mass(g));

    Field u = g;
    Field stage(g.lattice, comps);
    std::vector<double> lu(N);
    std::vector<double> lu2(N);
    std::vector<double> src(N, 0.0);
    std::vector<double> src2(N, 0.0);
    const double dt = plan.dt;
    for (std::size_t n = 0; n < plan.steps; ++n) {
        const double t = params.T * static_cast<double>(n) / static_cast<double>(plan.steps);
        const double t1 = params.T * static_cast<double>(n + 1) / static_cast<double>(plan.steps);
        if (h) {
            h(t, src);
            if (params.scheme == Scheme::heun) {
                h(t1, src2);
            }
        }
        for (int c = 0; c < comps; ++c) {
            auto uc = u.component(c);
            op.apply(t, uc, lu);
            if (params.scheme == Scheme::euler) {
                for (std::size_t i = 0; i < N; ++i) {
                    uc[i] += dt * (lu[i] + src[i]);
                }
            } else {
                auto sc = stage.component(c);
                for (std::size_t i = 0; i < N; ++i) {
                    sc[i] = uc[i] + dt * (lu[i] + src[i]);
                }
                op.apply(t1, sc, lu2);
                for (std::size_t i = 0; i < N; ++i) {
                    uc[i] += 0.5 * dt * (lu[i] + src[i] + lu2[i] + src2[i]);
                }
            }
        }
        check_finite(u.values, n + 1);
        if ((n + 1) % plan.stride == 0) {
            u.time = t1;
            traj.times.push_back(t1);
            traj.states.push_back(u);
            traj.mass.push_back(lattice_mass(u));
        }
    }
    return traj;
}

Trajectory solve_parabolic(const JumpOperator& op, const Field& g, const SourceTerm& h, const SolveParams& params)
{
    const Lattice lattice = op.lattice();
    SourceSampler sampler = [&h, lattice](double t, std::span<double> out) { h.sample(t, lattice, out); };
    return solve_parabolic(op, g, sampler, params);
}

Trajectory solve_limit(const Lattice& grid, std::span<const double> g, const SourceTerm* h, double alpha, double K,
                       const SolveParams& params)
{
    check_params(params);
    if (g.size() != grid.size()) {
        throw std::invalid_argument("solve_limit: initial datum size does not match the grid");
    }
    if (h && !h->grid().same_geometry(grid)) {
        throw std::invalid_argument("solve_limit: source grid differs from the solution grid");
    }
    const auto snaps = static_cast<std::size_t>(params.snapshots);
    std::size_t steps = 8 * snaps;
    if (params.dt_override) {
        steps = round_up(static_cast<std::size_t>(std::ceil(params.T / *params.dt_override - 1e-9)), snaps);
    }
    const std::size_t stride = steps / snaps;
    const double dt = params.T / static_cast<double>(steps);

    SpectralTorus torus(grid);
    const double c = K * stable_constant(grid.dim(), alpha);
    std::vector<double> full(torus.modes());
    std::vector<double> half(torus.modes());
    for (std::size_t m = 0; m < torus.modes(); ++m) {
        const double xi = torus.wavenumber_norms()[m];
        const double sym = xi == 0.0 ? 0.0 : -c * std::pow(xi, alpha);
        full[m] = std::exp(sym * dt);
        half[m] = std::exp(0.5 * sym * dt);
    }
    std::vector<std::complex<double>> u_hat(torus.modes());
    std::vector<std::complex<double>> h_hat(torus.modes());
    std::vector<double> src(grid.size());
    torus.forward(g, u_hat);

    Trajectory traj;
    traj.dt = dt;
    traj.steps = steps;
    traj.note = "spectral exponential integrator";
    Field u(grid);
    std::copy(g.begin(), g.end(), u.values.begin());
    traj.times.push_back(0.0);
    traj.states.push_back(u);
    traj.mass.push_back(integrate(u));
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = params.T * static_cast<double>(n) / static_cast<double>(steps);
        if (h) {
            h->sample(t + 0.5 * dt, src);
            torus.forward(src, h_hat);
        }
        for (std::size_t m = 0; m < u_hat.size(); ++m) {
            u_hat[m] *= full[m];
            if (h) {
                u_hat[m] += dt * half[m] * h_hat[m];
            }
        }
        if ((n + 1) % stride == 0) {
            const double t1 = params.T * static_cast<double>(n + 1) / static_cast<double>(steps);
            torus.backward(u_hat, u.values);
            u.time = t1;
            check_finite(u.values, n + 1);
            traj.times.push_back(t1);
            traj.states.push_back(u);
            traj.mass.push_back(integrate(u));
        }
    }
    return traj;
}

double extend_piecewise_constant(const Field& f, const Vec& x, int component)
{
    const Lattice& lat = f.lattice;
    Point z{};
    for (int c = 0; c < lat.dim(); ++c) {
        // kx in (z, z + 1] maps to z; snap near-integers so round-off cannot shift a cell
        const double kx = x[c] * lat.scale();
        const double snapped = std::abs(kx - std::round(kx)) <= 1e-12 ? std::round(kx) : kx;
        z[c] = static_cast<std::int64_t>(std::ceil(snapped)) - 1;
    }
    const auto idx = lat.find(z);
    return idx ? f.at(*idx, component) : 0.0;
}

RichardsonEstimate richardson(const Field& coarse, const Field& mid, const Field& fine)
{
    RichardsonEstimate est;
    est.difference_coarse = sup_distance(coarse, mid);
    est.difference_fine = sup_distance(mid, fine);
    if (est.difference_fine > 0.0 && est.difference_coarse > 0.0) {
        est.order = std::log2(est.difference_coarse / est.difference_fine);
        const double factor = std::pow(2.0, est.order) - 1.0;
        est.error = factor > 0.0 ? est.difference_fine / factor : est.difference_fine;
    } else {
        est.error = est.difference_fine;
    }
    return est;
}

double sup_distance(const Field& a, const Field& b)
{
    if (a.values.size() != b.values.size()) {
        throw std::invalid_argument("sup_distance: size mismatch");
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    }
    return m;
}

} // namespace rcm
