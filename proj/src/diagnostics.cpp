#include "rcm/diagnostics.hpp"

#include "rcm/operators.hpp"
#include "rcm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace rcm {

namespace {

double weighted_norm2(std::span<const double> v, double cell)
{
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return s * cell;
}

double average(std::span<const double> f)
{
    double s = 0.0;
    for (double v : f) {
        s += v;
    }
    return s / static_cast<double>(f.size());
}

double average_over(std::span<const double> f, std::span<const std::size_t> sites)
{
    return block_average(f, sites);
}

/// Breakpoints 0, 1, 2, 4, ..., S for integrands smooth on the scale of (1 + s).
/// 0, 1/8, ..., 1, then ratio 2^{1/8} up to S: Gauss-Legendre panels on these resolve
/// (1+s)^{-p} to near machine precision relative to the whole integral.
std::vector<double> geometric_breaks(double S)
{
    std::vector<double> breaks;
    for (int i = 0; i < 8 && i / 8.0 < S; ++i) {
        breaks.push_back(i / 8.0);
    }
    double b = 1.0;
    while (b < S) {
        breaks.push_back(b);
        b *= std::exp2(0.125);
    }
    breaks.push_back(S);
    return breaks;
}

} // namespace

RateFit fit_rate(std::span<const double> scales, std::span<const double> values)
{
    if (scales.size() != values.size()) {
        throw std::invalid_argument("fit_rate: scales and values differ in length");
    }
    RateFit fit;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (i > 0 && !(scales[i] > scales[i - 1])) {
            throw std::invalid_argument("fit_rate: scales must be strictly increasing");
        }
        if (!(scales[i] > 0.0)) {
            throw std::invalid_argument("fit_rate: scales must be positive");
        }
        if (values[i] > 0.0 && std::isfinite(values[i])) {
            fit.scales.push_back(scales[i]);
            fit.values.push_back(values[i]);
        } else {
            ++fit.excluded;
        }
    }
    if (fit.scales.size() < 3) {
        throw std::invalid_argument("fit_rate: fewer than three positive points");
    }
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < fit.scales.size(); ++i) {
        lx.push_back(std::log(fit.scales[i]));
        ly.push_back(std::log(fit.values[i]));
    }
    const LineFit line = least_squares(lx, ly);
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    fit.residual_rms = line.residual_rms;
    return fit;
}

double good_vertex_fraction(const Environment& env, int d, double t, const Point& x1, const Point& x2, const Point& y,
                            std::int64_t r, double delta)
{
    if (x1 == x2) {
        throw std::invalid_argument("good_vertex_fraction needs x1 != x2");
    }
    const Lattice ball = Lattice::integer_box(d, r, y);
    std::size_t good = 0;
    for (std::size_t i = 0; i < ball.size(); ++i) {
        const Point z = ball.grid_point(i);
        if (z == x1 || z == x2) {
            continue;
        }
        if (env.w(t, x1, z) >= delta && env.w(t, x2, z) >= delta) {
            ++good;
        }
    }
    return static_cast<double>(good) / static_cast<double>(ball.size());
}

GoodVertexStats good_vertex_survey(const Environment& env, int d, std::int64_t r, double delta, std::size_t samples,
                                   double t_max, std::uint64_t seed)
{
    GoodVertexStats stats;
    stats.delta = delta;
    stats.r = r;
    stats.samples = samples;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> time(0.0, t_max);
    std::uniform_int_distribution<std::int64_t> coord(-4 * r, 4 * r);
    auto point = [&] {
        Point p{};
        for (int c = 0; c < d; ++c) {
            p[c] = coord(rng);
        }
        return p;
    };
    double sum = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double t = time(rng);
        const Point x1 = point();
        Point x2 = point();
        while (x2 == x1) {
            x2 = point();
        }
        const Point y = point();
        const double frac = good_vertex_fraction(env, d, t, x1, x2, y, r, delta);
        stats.min_fraction = std::min(stats.min_fraction, frac);
        sum += frac;
    }
    stats.mean_fraction = samples > 0 ? sum / static_cast<double>(samples) : 0.0;
    return stats;
}

double poincare_ratio(const Environment& env, int d, double alpha, double t, const Point& y, std::int64_t r,
                      std::span<const double> f)
{
    const Lattice ball = Lattice::integer_box(d, r, y);
    if (f.size() != ball.size()) {
        throw std::invalid_argument("poincare_ratio: f must live on B_r(y)");
    }
    const JumpOperator op = JumpOperator::regional(ball, alpha, env);
    const double energy = op.energy(t, f);
    if (energy == 0.0) {
        const bool constant = std::all_of(f.begin(), f.end(), [&](double v) { return v == f[0]; });
        return constant ? 0.0 : std::numeric_limits<double>::infinity();
    }
    const double mean = average(f);
    double var = 0.0;
    for (double v : f) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(f.size());
    return var / (std::pow(static_cast<double>(r), alpha - d) * energy);
}

MultiscaleGap multiscale_poincare_gap(const Environment& env, int d, double alpha, double t, int m, int n,
                                      std::span<const double> f, std::span<const double> g)
{
    if (n < 0 || n > m) {
        throw std::invalid_argument("multiscale_poincare_gap needs 0 <= n <= m");
    }
    const Lattice box = Lattice::integer_box(d, std::int64_t{1} << m);
    if (f.size() != box.size() || g.size() != box.size()) {
        throw std::invalid_argument("multiscale_poincare_gap: f and g must live on B_{2^m}");
    }
    MultiscaleGap out;
    const double g_mean = average(g);
    for (std::size_t i = 0; i < f.size(); ++i) {
        out.lhs += f[i] * (g[i] - g_mean);
    }
    for (const DyadicBlock& block : dyadic_blocks(d, m, n)) {
        const auto sites = sites_of(box, block.box(d));
        const double gb = average_over(g, sites);
        for (std::size_t i : sites) {
            out.block_term += f[i] * (g[i] - gb);
        }
    }
    double scales = 0.0;
    for (int level = n; level < m; ++level) {
        double sq = 0.0;
        for (const DyadicBlock& block : dyadic_blocks(d, m, level)) {
            const double fb = average_over(f, sites_of(box, block.box(d)));
            sq += fb * fb;
        }
        scales += std::pow(2.0, level * (d + alpha) / 2.0) * std::sqrt(sq);
    }
    const JumpOperator op = JumpOperator::regional(box, alpha, env);
    out.energy_term = std::sqrt(op.energy(t, g)) * scales;
    if (out.energy_term > 0.0) {
        out.constant = (out.lhs - out.block_term) / out.energy_term;
    }
    return out;
}

BarGap operator_gap_bar(const SmoothProfile& f, std::span<const int> k_list, double T, double alpha,
                        const MeanProfile& profile, double half_width, int reference_scale)
{
    if (k_list.size() < 3) {
        throw std::invalid_argument("operator_gap_bar needs at least three scales");
    }
    const int d = f.d;
    const double K = profile.limit();
    const Lattice reference(d, reference_scale, half_width);
    std::vector<double> continuum(reference.size());
    {
        SpectralTorus torus(reference);
        torus.fractional(sample_values(reference, f), continuum, alpha, 1.0);
    }
    BarGap out;
    std::vector<double> scales;
    std::vector<double> residuals;
    for (int k : k_list) {
        const Lattice lat(d, k, half_width);
        const JumpOperator op = JumpOperator::bar_discrete(lat, alpha, MeanProfile::constant(1.0), BoundaryMode::periodic);
        const std::vector<double> fk = sample_values(lat, f);
        std::vector<double> a(lat.size());
        op.apply(0.0, fk, a);
        std::vector<double> diff(lat.size());
        double a_sq = 0.0;
        double a_diff = 0.0;
        double diff_sq = 0.0;
        for (std::size_t i = 0; i < lat.size(); ++i) {
            diff[i] = a[i] - continuum[torus_index(reference, lat, i)];
            a_sq += a[i] * a[i];
            a_diff += a[i] * diff[i];
            diff_sq += diff[i] * diff[i];
        }
        const double cell = lat.cell_measure();
        a_sq *= cell;
        a_diff *= cell;
        diff_sq *= cell;

        // K(k^a t) a - K b = (K(k^a t) - K) a + K (a - b); J_j = int_0^T (K(k^a t) - K)^j dt
        double J1 = 0.0;
        double J2 = 0.0;
        if (!profile.is_constant()) {
            const double scale = std::pow(static_cast<double>(k), alpha);
            const auto breaks = geometric_breaks(scale * T);
            const QuadratureRule rule = gauss_legendre_breaks(breaks, 5);
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double dev = profile(rule.nodes[q]) - K;
                J1 += rule.weights[q] * dev;
                J2 += rule.weights[q] * dev * dev;
            }
            J1 /= scale;
            J2 /= scale;
        }
        BarGapRow row;
        row.k = k;
        row.gap = J2 * a_sq + 2.0 * K * J1 * a_diff + K * K * T * diff_sq;
        const double pi = pi_term(profile, std::pow(static_cast<double>(k), alpha) * T);
        row.pi_part = T * pi * a_sq;
        row.cross = 2.0 * K * J1 * a_diff;
        row.calibration = pi > 0.0 ? (row.pi_part + row.cross) / (T * pi) : a_sq;
        row.residual = row.gap - row.pi_part - row.cross;
        out.rows.push_back(row);
        scales.push_back(k);
        residuals.push_back(row.residual);
    }
    const auto positive = std::count_if(residuals.begin(), residuals.end(), [](double r) { return r > 0.0; });
    if (positive >= 3) {
        out.fit = fit_rate(scales, residuals);
    } else {
        out.fit.excluded = residuals.size() - static_cast<std::size_t>(positive);
        out.fit.slope = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

double operator_gap_random(const Environment& env, const SmoothProfile& f, int k, double T, double alpha,
                           GapVariant variant, double half_width, int panels)
{
    const Lattice lat(f.d, k, half_width);
    const JumpOperator op = JumpOperator::scaled(lat, alpha, env, BoundaryMode::periodic);
    const JumpOperator bar = JumpOperator::bar_discrete(lat, alpha, env.mean_profile(), BoundaryMode::periodic);
    const Field fk = sample_profile(lat, f);
    const Field grad = sample_gradient(lat, f);
    if (panels <= 0) {
        panels = std::max(64, static_cast<int>(std::ceil(2.0 * op.time_scale() * T)));
    }
    const QuadratureRule rule = gauss_legendre(0.0, T, panels, 3);
    double total = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double t = rule.nodes[q];
        const Field random = variant == GapVariant::hat ? op.apply_hat(t, fk, grad) : op.apply(t, fk);
        const Field mean = bar.apply(t, fk);
        double s = 0.0;
        for (std::size_t i = 0; i < lat.size(); ++i) {
            const double e = random.values[i] - mean.values[i];
            s += e * e;
        }
        total += rule.weights[q] * s * lat.cell_measure();
    }
    return total;
}

CutoffGap cutoff_gap(const SmoothProfile& f, std::span<const double> radii, double alpha, double K, double half_width,
                     int points_per_unit)
{
    if (radii.size() < 3) {
        throw std::invalid_argument("cutoff_gap needs at least three radii");
    }
    const Lattice grid(f.d, points_per_unit, half_width);
    SpectralTorus torus(grid);
    const std::vector<double> fv = sample_values(grid, f);
    CutoffGap out;
    std::vector<double> outer(grid.size());
    std::vector<double> lout(grid.size());
    for (double R : radii) {
        if (R > half_width) {
            throw std::invalid_argument("cutoff_gap: radius exceeds the torus");
        }
        // Lbar f - Lbar(f psi_R) = Lbar(f (1 - psi_R)), evaluated without cancellation
        for (std::size_t i = 0; i < grid.size(); ++i) {
            outer[i] = fv[i] * (1.0 - cutoff_psi(R, grid.position(i), f.d).value);
        }
        torus.fractional(outer, lout, alpha, K);
        out.radii.push_back(R);
        out.gaps.push_back(weighted_norm2(lout, grid.cell_measure()));
    }
    const auto positive = std::count_if(out.gaps.begin(), out.gaps.end(), [](double g) { return g > 0.0; });
    if (positive >= 3) {
        out.fit = fit_rate(out.radii, out.gaps);
    } else {
        out.fit.excluded = out.gaps.size() - static_cast<std::size_t>(positive);
        out.fit.slope = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

SupL2Error sup_l2_error(const Trajectory& u_k, const Trajectory& u_bar)
{
    if (u_k.times.size() != u_bar.times.size() || u_k.states.size() != u_bar.states.size()) {
        throw std::invalid_argument("sup_l2_error: snapshot counts differ");
    }
    for (std::size_t j = 0; j < u_k.times.size(); ++j) {
        if (std::abs(u_k.times[j] - u_bar.times[j]) > 1e-12 * std::max(1.0, std::abs(u_k.times[j]))) {
            throw std::invalid_argument("sup_l2_error: snapshot times are misaligned");
        }
    }
    SupL2Error out;
    if (u_k.states.empty()) {
        return out;
    }
    const Lattice& coarse = u_k.states.front().lattice;
    const Lattice& fine = u_bar.states.front().lattice;
    if (fine.half_width() < coarse.half_width() - 1e-12 || fine.center() != Point{} || coarse.center() != Point{}) {
        throw std::invalid_argument("sup_l2_error: reference grid must be centered and cover the lattice box");
    }
    std::vector<std::size_t> map(coarse.size());
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        map[i] = torus_index(fine, coarse, i);
    }
    // fine sites outside the coarse box (-R, R]^d
    std::vector<std::size_t> outside;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const Vec x = fine.position(i);
        for (int c = 0; c < fine.dim(); ++c) {
            if (x[c] <= -coarse.half_width() + 1e-12 || x[c] > coarse.half_width() + 1e-12) {
                outside.push_back(i);
                break;
            }
        }
    }
    for (std::size_t j = 0; j < u_k.states.size(); ++j) {
        const Field& a = u_k.states[j];
        const Field& b = u_bar.states[j];
        double dist = 0.0;
        for (std::size_t i = 0; i < coarse.size(); ++i) {
            const double e = a.values[i] - b.values[map[i]];
            dist += e * e;
        }
        dist = std::sqrt(dist * coarse.cell_measure());
        double leak = 0.0;
        for (std::size_t i : outside) {
            leak += b.values[i] * b.values[i];
        }
        out.leaked = std::max(out.leaked, std::sqrt(leak * fine.cell_measure()));
        out.per_snapshot.push_back(dist);
        out.value = std::max(out.value, dist);
    }
    return out;
}

} // namespace rcm
