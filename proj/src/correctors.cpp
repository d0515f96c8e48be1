#include "rcm/correctors.hpp"

#include "rcm/errors.hpp"
#include "rcm/kernel.hpp"
#include "rcm/numerics.hpp"
#include "rcm/operators.hpp"
#include "rcm/testfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace rcm {

namespace {

/// z |z|^{-d-alpha} for offsets in the positive half space (0 <lex z), |z| <= radius.
struct HalfOffsets {
    std::vector<Point> steps;
    std::vector<Vec> weights;
};

HalfOffsets half_offsets(int d, double alpha, double radius)
{
    HalfOffsets out;
    const auto r = static_cast<std::int64_t>(std::floor(radius + 1e-12));
    Point lo{};
    Point hi{};
    for (int c = 0; c < d; ++c) {
        lo[c] = -r;
        hi[c] = r;
    }
    const Point origin{};
    Point z = lo;
    while (true) {
        double n2 = 0.0;
        for (int c = 0; c < d; ++c) {
            n2 += static_cast<double>(z[c] * z[c]);
        }
        if (lex_less(origin, z) && n2 <= radius * radius * (1.0 + 1e-14)) {
            const double scale = std::pow(n2, -0.5 * (d + alpha));
            Vec wgt{};
            for (int c = 0; c < d; ++c) {
                wgt[c] = static_cast<double>(z[c]) * scale;
            }
            out.steps.push_back(z);
            out.weights.push_back(wgt);
        }
        int c = d - 1;
        while (c >= 0 && z[c] == hi[c]) {
            z[c] = lo[c];
            --c;
        }
        if (c < 0) {
            break;
        }
        ++z[c];
    }
    return out;
}

Point shifted(const Point& x, const Point& z, int sign)
{
    Point y = x;
    for (int c = 0; c < kMaxDim; ++c) {
        y[c] += sign * z[c];
    }
    return y;
}

double canonical_draw(const Environment& env, const RandomSource& source, const Point& a, const Point& b)
{
    return lex_less(a, b) ? env.draw(source, a, b) : env.draw(source, b, a);
}

/// sum over the half offsets of weight * (Z(x, x+z) - Z(x, x-z)) for one source.
Vec source_drift(const Environment& env, const HalfOffsets& half, const RandomSource& source, const Point& x, int d)
{
    Vec v{};
    if (source.deterministic()) {
        return v;
    }
    for (std::size_t i = 0; i < half.steps.size(); ++i) {
        const double diff = canonical_draw(env, source, x, shifted(x, half.steps[i], 1)) -
                            canonical_draw(env, source, x, shifted(x, half.steps[i], -1));
        for (int c = 0; c < d; ++c) {
            v[c] += half.weights[i][c] * diff;
        }
    }
    return v;
}

Vec slice_drift(const Environment& env, const HalfOffsets& half, double t, const Point& x, int d)
{
    const EnvironmentSlice sl = env.slice(t);
    Vec v{};
    for (int s = 0; s < 2; ++s) {
        if (sl.coeff[s] == 0.0) {
            continue;
        }
        const Vec part = source_drift(env, half, sl.source[s], x, d);
        for (int c = 0; c < d; ++c) {
            v[c] += sl.coeff[s] * part[c];
        }
    }
    return v;
}

void check_dim(int d)
{
    if (d < 1 || d > kMaxDim) {
        throw std::invalid_argument("dimension must be 1, 2 or 3");
    }
}

/// Per-source drift on a box, d components, with the box average of each.
struct SourceDrift {
    std::vector<double> values; ///< component-major, d * N
    Vec average{};
};

class DriftCache {
public:
    DriftCache(const Environment& env, const Lattice& box, HalfOffsets half)
        : env_(env), box_(box), half_(std::move(half))
    {
    }

    const SourceDrift& get(const RandomSource& source)
    {
        const auto key = std::make_pair(source.block, source.slot);
        auto it = entries_.find(key);
        if (it != entries_.end()) {
            return it->second;
        }
        // slices only move forward in time, so older blocks are never revisited
        while (entries_.size() >= 4) {
            entries_.erase(entries_.begin());
        }
        const int d = box_.dim();
        const std::size_t N = box_.size();
        SourceDrift entry;
        entry.values.assign(static_cast<std::size_t>(d) * N, 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            const Vec v = source_drift(env_, half_, source, box_.grid_point(i), d);
            for (int c = 0; c < d; ++c) {
                entry.values[static_cast<std::size_t>(c) * N + i] = v[c];
            }
        }
        for (int c = 0; c < d; ++c) {
            double sum = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                sum += entry.values[static_cast<std::size_t>(c) * N + i];
            }
            entry.average[c] = sum / static_cast<double>(N);
        }
        return entries_.emplace(key, std::move(entry)).first->second;
    }

private:
    const Environment& env_;
    Lattice box_;
    HalfOffsets half_;
    std::map<std::pair<std::int64_t, int>, SourceDrift> entries_;
};

} // namespace

double drift_tail_bound(int d, double alpha, double w_bound, double radius)
{
    check_dim(d);
    if (!(alpha > 1.0 && alpha < 2.0)) {
        throw std::invalid_argument("drift tail bound needs alpha in (1,2)");
    }
    const double h = 0.5 * std::sqrt(static_cast<double>(d));
    const double start = radius - 2.0 * h;
    if (!(start > 0.0)) {
        throw std::invalid_argument("drift radius must exceed sqrt(d)");
    }
    const double s = d + alpha - 1.0;
    double integral = 0.0;
    if (d == 1) {
        integral = std::pow(start, 1.0 - s) / (s - 1.0);
    } else {
        integral = integrate_adaptive([=](double u) { return std::pow(u, -s) * std::pow(u + h, d - 1); }, start,
                                      std::numeric_limits<double>::infinity(), 1e-10);
    }
    return w_bound * unit_sphere_area(d) * integral;
}

DriftValue drift_field_V(const Environment& env, int d, double alpha, double t, const Point& x, double radius)
{
    check_dim(d);
    if (!(alpha > 1.0 && alpha < 2.0)) {
        throw std::invalid_argument("drift_field_V converges only for alpha in (1,2); use drift_field_Vm");
    }
    DriftValue out;
    out.value = slice_drift(env, half_offsets(d, alpha, radius), t, x, d);
    out.tail_bound = drift_tail_bound(d, alpha, env.upper_bound(), radius);
    return out;
}

Vec drift_field_Vm(const Environment& env, int d, double alpha, double t, const Point& x, int m)
{
    check_dim(d);
    if (!(alpha > 0.0 && alpha < 2.0) || m < 0) {
        throw std::invalid_argument("drift_field_Vm needs alpha in (0,2) and m >= 0");
    }
    return slice_drift(env, half_offsets(d, alpha, std::ldexp(1.0, m)), t, x, d);
}

double CorrectorRun::sup_l2_squared() const
{
    return l2_squared.empty() ? 0.0 : *std::max_element(l2_squared.begin(), l2_squared.end());
}

Field CorrectorRun::at(double s) const
{
    if (states.empty()) {
        throw std::logic_error("corrector run has no snapshots");
    }
    if (s < 0.0 || s > times.back() * (1.0 + 1e-12)) {
        throw std::out_of_range("corrector time outside the solved horizon");
    }
    const auto it = std::upper_bound(times.begin(), times.end(), s);
    if (it == times.end()) {
        return states.back();
    }
    const auto j = static_cast<std::size_t>(it - times.begin());
    const double t0 = times[j - 1];
    const double t1 = times[j];
    const double lambda = (s - t0) / (t1 - t0);
    Field out = states[j - 1];
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] += lambda * (states[j].values[i] - out.values[i]);
    }
    out.time = s;
    return out;
}

CorrectorRun solve_corrector(const Environment& env, int d, double alpha, int m, const CorrectorParams& params)
{
    check_dim(d);
    if (!(alpha > 0.0 && alpha < 2.0)) {
        throw std::invalid_argument("alpha must lie in (0,2)");
    }
    if (m < 1 || m > 20) {
        throw std::invalid_argument("corrector level m must lie in [1, 20]");
    }
    const Lattice box = Lattice::integer_box(d, std::int64_t{1} << m);
    const JumpOperator op = JumpOperator::regional(box, alpha, env);

    CorrectorRun run;
    run.m = m;
    run.d = d;
    run.alpha = alpha;
    run.horizon = std::pow(2.0, m * alpha) * params.T;
    if (alpha > 1.0) {
        run.drift_radius = params.drift_radius.value_or(std::ldexp(1.0, m + 1));
        run.drift_tail = drift_tail_bound(d, alpha, env.upper_bound(), run.drift_radius);
    } else {
        run.drift_radius = std::ldexp(1.0, m);
    }

    SolveParams sp;
    sp.T = run.horizon;
    sp.cfl_fraction = params.cfl_fraction;
    sp.snapshots = params.snapshots;
    const StepPlan plan = cfl_dt(op, sp);
    run.dt = plan.dt;
    run.steps = plan.steps;

    const std::size_t N = box.size();
    DriftCache drifts(env, box, half_offsets(d, alpha, run.drift_radius));
    Field phi(box, d);
    std::vector<double> lphi(static_cast<std::size_t>(d) * N);
    std::vector<double> forcing(static_cast<std::size_t>(d) * N);
    double accumulated = 0.0;
    double previous_energy = 0.0;

    for (std::size_t n = 0;; ++n) {
        const double t = run.horizon * static_cast<double>(n) / static_cast<double>(plan.steps);
        double energy = 0.0;
        for (int c = 0; c < d; ++c) {
            auto pc = phi.component(c);
            std::span<double> lc(lphi.data() + static_cast<std::size_t>(c) * N, N);
            op.apply(t, pc, lc);
            for (std::size_t i = 0; i < N; ++i) {
                energy -= pc[i] * lc[i];
            }
        }
        if (params.record_step_energy) {
            run.step_energy.push_back(energy);
        }
        if (n > 0) {
            accumulated += 0.5 * plan.dt * (previous_energy + energy);
        }
        previous_energy = energy;

        if (n % plan.stride == 0) {
            phi.time = t;
            double l2 = 0.0;
            double defect = 0.0;
            for (int c = 0; c < d; ++c) {
                double sum = 0.0;
                double sq = 0.0;
                for (double v : phi.component(c)) {
                    sum += v;
                    sq += v * v;
                }
                l2 += sq;
                if (sq > 0.0) {
                    defect = std::max(defect, std::abs(sum) / std::sqrt(sq));
                }
            }
            run.times.push_back(t);
            run.states.push_back(phi);
            run.energy_integral.push_back(accumulated);
            run.l2_squared.push_back(l2);
            run.mean_defect.push_back(defect);
        }
        if (n == plan.steps) {
            break;
        }

        // forcing V - avg V, recomputed from the cached per-source drifts at every step
        const EnvironmentSlice sl = env.slice(t);
        std::fill(forcing.begin(), forcing.end(), 0.0);
        for (int s = 0; s < 2; ++s) {
            if (sl.coeff[s] == 0.0 || sl.source[s].deterministic()) {
                continue;
            }
            const SourceDrift& part = drifts.get(sl.source[s]);
            for (int c = 0; c < d; ++c) {
                const std::size_t off = static_cast<std::size_t>(c) * N;
                for (std::size_t i = 0; i < N; ++i) {
                    forcing[off + i] += sl.coeff[s] * (part.values[off + i] - part.average[c]);
                }
            }
        }
        for (std::size_t i = 0; i < phi.values.size(); ++i) {
            phi.values[i] += plan.dt * (lphi[i] + forcing[i]);
        }
        for (int c = 0; c < d; ++c) {
            auto pc = phi.component(c);
            double sum = 0.0;
            double sq = 0.0;
            for (double v : pc) {
                sum += v;
                sq += v * v;
            }
            // keep a margin of 10 below the guaranteed 1e-10 relative defect
            if (std::abs(sum) > 1e-11 * std::sqrt(sq)) {
                const double mean = sum / static_cast<double>(N);
                for (double& v : pc) {
                    v -= mean;
                }
                ++run.reprojections;
            }
        }
        for (double v : phi.values) {
            if (!std::isfinite(v)) {
                throw NumericalError("corrector solve produced a non-finite value at step " + std::to_string(n + 1));
            }
        }
    }
    return run;
}

double corrector_normalization(int d, double alpha, int m, double T)
{
    double exponent = 0.0;
    if (alpha > 1.0) {
        exponent = alpha + d;
    } else if (alpha == 1.0) {
        exponent = d + 1.0;
    } else {
        exponent = d + 2.0 * (1.0 - alpha) + alpha;
    }
    return std::pow(2.0, m * exponent) * T;
}

CorrectorScaling corrector_scaling_report(const std::vector<CorrectorRun>& runs, double T)
{
    if (runs.size() < 3) {
        throw std::invalid_argument("corrector scaling needs at least three levels");
    }
    CorrectorScaling out;
    std::vector<double> logm;
    std::vector<double> logq;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const CorrectorRun& run = runs[i];
        if (i > 0 && run.m <= runs[i - 1].m) {
            throw std::invalid_argument("corrector levels must be strictly increasing");
        }
        CorrectorScalingRow row;
        row.m = run.m;
        row.sup_l2 = run.sup_l2_squared();
        row.energy = run.total_energy();
        row.Q = (row.sup_l2 + row.energy) / corrector_normalization(run.d, run.alpha, run.m, T);
        out.rows.push_back(row);
        if (row.Q > 0.0) {
            logm.push_back(std::log(static_cast<double>(run.m)));
            logq.push_back(std::log(row.Q));
        }
    }
    if (logq.size() >= 2) {
        out.fit = least_squares(logm, logq);
        const auto [lo, hi] = std::minmax_element(logq.begin(), logq.end());
        out.blowup = std::exp(*hi - *lo);
    }
    return out;
}

Field build_two_scale(const Field& u, const Field& grad_u, const CorrectorRun& phi, double alpha, double theta,
                      double t)
{
    const Lattice& lat = u.lattice;
    const int d = lat.dim();
    if (grad_u.components != d || !grad_u.lattice.same_geometry(lat)) {
        throw std::invalid_argument("two-scale ansatz: gradient must carry d components on the lattice of u");
    }
    if (phi.d != d) {
        throw std::invalid_argument("two-scale ansatz: corrector dimension mismatch");
    }
    const double k = lat.scale();
    const double R = std::pow(k, theta);
    const Field corrector = phi.at(std::pow(k, alpha) * t);
    const Lattice& box = corrector.lattice;
    Field v(lat, 1, t);
    for (std::size_t i = 0; i < lat.size(); ++i) {
        const Vec x = lat.position(i);
        const Jet psi = cutoff_psi(R, x, d);
        double value = u.at(i) * psi.value;
        if (const auto j = box.find(lat.grid_point(i))) {
            double inner = 0.0;
            for (int c = 0; c < d; ++c) {
                const double grad = grad_u.at(i, c) * psi.value + u.at(i) * psi.grad[c];
                inner += grad * corrector.at(*j, c);
            }
            value += inner / k;
        }
        v.at(i) = value;
    }
    return v;
}

} // namespace rcm
