#include "rcm/experiments.hpp"

#include "rcm/correctors.hpp"
#include "rcm/diagnostics.hpp"
#include "rcm/errors.hpp"
#include "rcm/numerics.hpp"
#include "rcm/operators.hpp"
#include "rcm/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace rcm {

namespace {

/// Runs fn(0..n-1) on up to `threads` workers; results keep task order.
/// On failure the remaining tasks are skipped and `error` holds the first message.
template <class T, class F>
std::vector<std::optional<T>> run_tasks(std::size_t n, int threads, F&& fn, std::string& error)
{
    std::vector<std::optional<T>> out(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex lock;
    auto worker = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                out[i] = fn(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> guard(lock);
                if (error.empty()) {
                    error = e.what();
                }
                failed = true;
            }
        }
    };
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
    if (count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < count; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    return out;
}

std::string fmt(double v, int precision = 4)
{
    std::ostringstream out;
    out.precision(precision);
    out << v;
    return out.str();
}

Measurement row(const ExperimentConfig& c, const std::string& quantity, double value)
{
    Measurement m;
    m.experiment = c.name;
    m.quantity = quantity;
    m.d = c.d;
    m.alpha = c.alpha;
    m.value = value;
    return m;
}

Check check(const std::string& name, bool pass, const std::string& detail)
{
    return Check{name, pass, detail};
}

SmoothProfile initial_bump(const ExperimentConfig& c)
{
    SmoothProfile g;
    g.kind = SmoothProfile::Kind::compact_bump;
    g.d = c.d;
    g.amplitude = c.g_amplitude;
    g.radius = c.g_radius;
    return make_initial_g(g);
}

SmoothProfile test_profile(const ExperimentConfig& c)
{
    SmoothProfile p = c.test_profile;
    p.d = c.d;
    return p;
}

SourceTerm make_source(const ExperimentConfig& c, const Lattice& grid)
{
    const double K = c.profile.limit();
    switch (c.source) {
    case SourceKind::zero:
        return SourceTerm::zero(grid, c.alpha, K, c.T, initial_bump(c));
    case SourceKind::modulated:
        return SourceTerm::modulated(grid, c.alpha, K, c.T, test_profile(c), c.source_a0, c.source_a1, c.beta);
    case SourceKind::cutoff_duhamel:
        return SourceTerm::cutoff_duhamel(grid, c.alpha, K, c.T, initial_bump(c), std::nullopt, c.source_shift);
    }
    throw ConfigError("unknown source kind");
}

/// True when every entry is below its predecessor.
bool strictly_decreasing(const std::vector<double>& v)
{
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] < v[i - 1])) {
            return false;
        }
    }
    return true;
}

std::string join_values(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + fmt(v[i]);
    }
    return out;
}

/// Scale-by-scale stability band: spread of all values and growth of the per-scale medians.
void stability_checks(ExperimentResult& result, const std::string& label, const std::vector<double>& scales,
                      const std::vector<std::vector<double>>& values_by_scale, double max_spread)
{
    std::vector<double> all;
    std::vector<double> medians;
    bool finite_positive = true;
    for (const auto& vals : values_by_scale) {
        for (double v : vals) {
            finite_positive = finite_positive && std::isfinite(v) && v > 0.0;
            all.push_back(v);
        }
        medians.push_back(median(vals));
    }
    const auto [lo, hi] = std::minmax_element(all.begin(), all.end());
    const double spread = finite_positive ? *hi / *lo : std::numeric_limits<double>::infinity();
    result.summary[label + "_spread"] = spread;
    result.checks.push_back(check(label + " spread", finite_positive && spread <= max_spread,
                                  "max/min = " + fmt(spread) + " (band <= " + fmt(max_spread) + ")"));
    bool increasing = medians.size() > 1;
    for (std::size_t i = 1; i < medians.size(); ++i) {
        increasing = increasing && medians[i] > medians[i - 1];
    }
    const double growth = medians.back() / medians.front();
    const bool blowup = increasing && growth > 10.0;
    result.summary[label + "_median_growth"] = growth;
    std::string detail = "medians by scale " + join_values(medians) + " at scales " + join_values(scales);
    result.checks.push_back(check(label + " no monotone blow-up", !blowup, detail));
}

/// A smooth random function on a box: four cosine modes at the box scale in random directions.
std::vector<double> random_smooth(const Lattice& box, const Point& center, double scale, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    const int d = box.dim();
    std::vector<double> out(box.size(), 0.0);
    for (int j = 1; j <= 4; ++j) {
        const double amp = normal(rng);
        const double ph = phase(rng);
        Vec dir{};
        double n2 = 0.0;
        for (int c = 0; c < d; ++c) {
            dir[c] = normal(rng);
            n2 += dir[c] * dir[c];
        }
        for (int c = 0; c < d; ++c) {
            dir[c] /= std::sqrt(n2);
        }
        for (std::size_t i = 0; i < box.size(); ++i) {
            const Point p = box.grid_point(i);
            double proj = 0.0;
            for (int c = 0; c < d; ++c) {
                proj += dir[c] * static_cast<double>(p[c] - center[c]);
            }
            out[i] += amp * std::cos(M_PI * j * proj / scale + ph);
        }
    }
    return out;
}

void subtract_mean(std::vector<double>& f)
{
    double s = 0.0;
    for (double v : f) {
        s += v;
    }
    s /= static_cast<double>(f.size());
    for (double& v : f) {
        v -= s;
    }
}

Field on_lattice(const Lattice& lattice, const Lattice& grid, std::span<const double> values)
{
    Field out(lattice);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        out.at(i) = values[torus_index(grid, lattice, i)];
    }
    return out;
}

} // namespace

SlopeBand bar_gap_band(double alpha)
{
    if (alpha < 1.0) {
        return {-2.4, -1.6};
    }
    if (alpha == 1.0) {
        return {-std::numeric_limits<double>::infinity(), -1.5};
    }
    const double theory = -2.0 * (2.0 - alpha);
    return {theory - 0.4, theory + 0.4};
}

double exceedance(const MarginalLaw& law, double x)
{
    switch (law.kind()) {
    case MarginalLaw::Kind::uniform02:
        return std::clamp(1.0 - x / 2.0, 0.0, 1.0);
    case MarginalLaw::Kind::bernoulli:
        if (x <= 0.0) {
            return 1.0;
        }
        return x <= 1.0 / (1.0 - law.q()) ? 1.0 - law.q() : 0.0;
    case MarginalLaw::Kind::two_point:
        if (x <= law.lo()) {
            return 1.0;
        }
        return x <= law.hi() ? (1.0 - law.lo()) / (law.hi() - law.lo()) : 0.0;
    }
    return 0.0;
}

ExperimentResult run_experiment(const ExperimentConfig& config)
{
    validate(config);
    switch (config.kind) {
    case ExperimentKind::homogenization_rate:
        return homogenization_rate(config);
    case ExperimentKind::corrector_scaling:
        return corrector_scaling(config);
    case ExperimentKind::operator_gaps:
        return operator_gaps(config);
    case ExperimentKind::poincare_suite:
        return poincare_suite(config);
    case ExperimentKind::cutoff_lemma:
        return cutoff_lemma(config);
    case ExperimentKind::time_change_check:
        return time_change_check(config);
    }
    throw ConfigError("unknown experiment kind");
}

ExperimentResult homogenization_rate(const ExperimentConfig& c)
{
    ExperimentResult result;
    result.experiment = c.name;
    const Lattice reference(c.d, c.reference_scale, c.half_width);
    const SourceTerm source = make_source(c, reference);
    const bool has_source = c.source != SourceKind::zero;
    SolveParams params = c.solver;
    params.T = c.T;
    const Trajectory limit =
        solve_limit(reference, source.initial(), has_source ? &source : nullptr, c.alpha, c.profile.limit(), params);
    result.steps += limit.steps;

    struct Outcome {
        double error;
        double leaked;
        std::size_t steps;
    };
    const std::size_t S = c.seeds.size();
    std::string error;
    const std::vector<double> initial = source.initial();
    auto outcomes = run_tasks<Outcome>(
        c.k_list.size() * S, c.threads,
        [&](std::size_t task) {
            const int k = c.k_list[task / S];
            const Lattice lattice(c.d, k, c.half_width);
            const Environment env(environment_spec(c, c.seeds[task % S]));
            const JumpOperator op = JumpOperator::scaled(lattice, c.alpha, env, BoundaryMode::periodic);
            const Field g = on_lattice(lattice, reference, initial);
            const Trajectory u = has_source ? solve_parabolic(op, g, source, params)
                                            : solve_parabolic(op, g, SourceSampler{}, params);
            const SupL2Error e = sup_l2_error(u, limit);
            return Outcome{e.value, e.leaked, u.steps};
        },
        error);

    std::vector<double> ks;
    std::vector<double> medians;
    Series scatter{"seeds", {}, {}, std::nullopt, true};
    for (std::size_t ki = 0; ki < c.k_list.size(); ++ki) {
        std::vector<double> errs;
        for (std::size_t s = 0; s < S; ++s) {
            const auto& o = outcomes[ki * S + s];
            if (!o) {
                continue;
            }
            Measurement m = row(c, "sup_l2_error", o->error);
            m.k = c.k_list[ki];
            m.R = c.half_width;
            m.seed = static_cast<std::int64_t>(c.seeds[s] + c.seed_offset);
            result.rows.push_back(m);
            m.quantity = "leaked_l2";
            m.value = o->leaked;
            result.rows.push_back(m);
            result.steps += o->steps;
            errs.push_back(o->error);
            scatter.x.push_back(c.k_list[ki]);
            scatter.y.push_back(o->error);
        }
        if (errs.size() == S) {
            ks.push_back(c.k_list[ki]);
            medians.push_back(median(errs));
            Measurement m = row(c, "median_sup_l2_error", medians.back());
            m.k = c.k_list[ki];
            m.R = c.half_width;
            result.rows.push_back(m);
        }
    }
    if (!error.empty()) {
        throw ExperimentAborted("homogenization-rate worker failed: " + error, result);
    }
    result.checks.push_back(check("median error strictly decreasing in k", strictly_decreasing(medians),
                                  "medians " + join_values(medians)));
    Series line{"median over seeds", ks, medians, std::nullopt, false};
    if (ks.size() >= 3) {
        const RateFit fit = fit_rate(ks, medians);
        result.summary["fitted_slope"] = fit.slope;
        result.summary["fit_residual_rms"] = fit.residual_rms;
        line.fit = std::make_pair(fit.slope, fit.intercept);
        result.checks.push_back(check("fitted slope <= -0.10", fit.slope <= -0.10, "slope " + fmt(fit.slope)));
    }
    if (c.alpha > 1.0) {
        result.summary["theory_slope"] = -(2.0 - c.alpha) / 2.0;
    }
    result.plots.push_back(Plot{"homogenization_rate", "sup_t L2 error against k", "k", "sup_t ||u_k - u_bar||",
                                {scatter, line}});
    return result;
}

ExperimentResult corrector_scaling(const ExperimentConfig& c)
{
    ExperimentResult result;
    result.experiment = c.name;
    const std::size_t S = c.seeds.size();
    const std::size_t M = c.m_list.size();
    CorrectorParams params;
    params.T = c.corrector_T;
    params.cfl_fraction = c.solver.cfl_fraction;
    params.snapshots = c.solver.snapshots;
    std::string error;
    auto runs = run_tasks<CorrectorRun>(
        M * S, c.threads,
        [&](std::size_t task) {
            const Environment env(environment_spec(c, c.seeds[task / M]));
            CorrectorRun run = solve_corrector(env, c.d, c.alpha, c.m_list[task % M], params);
            run.states.clear();
            run.states.shrink_to_fit();
            return run;
        },
        error);
    if (!error.empty()) {
        throw ExperimentAborted("corrector-scaling worker failed: " + error, result);
    }

    double worst_defect = 0.0;
    bool monotone = true;
    bool all_powers = true;
    bool all_blowups = true;
    std::string powers;
    Plot plot{"corrector_scaling", "normalized corrector energy Q(m)", "m", "Q(m)", {}};
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<CorrectorRun> per_seed;
        for (std::size_t mi = 0; mi < M; ++mi) {
            const CorrectorRun& run = *runs[s * M + mi];
            for (double v : run.mean_defect) {
                worst_defect = std::max(worst_defect, v);
            }
            for (std::size_t j = 1; j < run.energy_integral.size(); ++j) {
                monotone = monotone && run.energy_integral[j] >= run.energy_integral[j - 1];
            }
            result.steps += run.steps;
            per_seed.push_back(run);
        }
        const CorrectorScaling scaling = corrector_scaling_report(per_seed, c.corrector_T);
        const auto seed = static_cast<std::int64_t>(c.seeds[s] + c.seed_offset);
        Series series{"seed " + std::to_string(seed), {}, {}, std::nullopt, false};
        for (const auto& r : scaling.rows) {
            for (auto [name, value] : {std::pair{"sup_l2_squared", r.sup_l2}, std::pair{"energy_integral", r.energy},
                                       std::pair{"Q", r.Q}}) {
                Measurement m = row(c, name, value);
                m.m = r.m;
                m.seed = seed;
                result.rows.push_back(m);
            }
            series.x.push_back(r.m);
            series.y.push_back(r.Q);
        }
        const bool vanishing = std::all_of(scaling.rows.begin(), scaling.rows.end(), [](const auto& r) { return r.Q == 0.0; });
        if (!vanishing) {
            series.fit = std::make_pair(scaling.fit.slope, scaling.fit.intercept);
        }
        all_powers = all_powers && scaling.fit.slope <= 3.0;
        all_blowups = all_blowups && scaling.blowup <= 100.0;
        powers += (s ? ", " : "") + fmt(scaling.fit.slope) + " (blow-up " + fmt(scaling.blowup) + ")";
        result.summary["power_seed_" + std::to_string(seed)] = scaling.fit.slope;
        result.summary["blowup_seed_" + std::to_string(seed)] = scaling.blowup;
        plot.series.push_back(series);
    }
    result.summary["max_mean_defect"] = worst_defect;
    result.checks.push_back(check("Q(m) power of m <= 3", all_powers, "fitted powers " + powers));
    result.checks.push_back(check("Q(m) blow-up across m <= 100x", all_blowups, "per seed " + powers));
    result.checks.push_back(check("corrector mean zero at every snapshot", worst_defect <= 1e-10,
                                  "max relative defect " + fmt(worst_defect)));
    result.checks.push_back(check("energy integral nondecreasing", monotone, monotone ? "yes" : "no"));
    result.plots.push_back(plot);
    return result;
}

ExperimentResult operator_gaps(const ExperimentConfig& c)
{
    ExperimentResult result;
    result.experiment = c.name;
    const SmoothProfile f = test_profile(c);
    const BarGap gap = operator_gap_bar(f, c.k_list, c.T, c.alpha, c.profile, c.half_width, c.reference_scale);
    std::vector<double> ks;
    std::vector<double> gaps;
    std::vector<double> residuals;
    for (const BarGapRow& r : gap.rows) {
        for (auto [name, value] : {std::pair{"bar_gap", r.gap}, std::pair{"pi_part", r.pi_part},
                                   std::pair{"pi_cross", r.cross}, std::pair{"pi_calibration", r.calibration},
                                   std::pair{"bar_gap_residual", r.residual}}) {
            Measurement m = row(c, name, value);
            m.k = r.k;
            m.R = c.half_width;
            result.rows.push_back(m);
        }
        ks.push_back(r.k);
        gaps.push_back(r.gap);
        residuals.push_back(r.residual);
    }
    const SlopeBand band = bar_gap_band(c.alpha);
    result.summary["bar_gap_slope"] = gap.fit.slope;
    result.summary["bar_gap_residual_rms"] = gap.fit.residual_rms;
    result.summary["bar_gap_excluded"] = static_cast<double>(gap.fit.excluded);
    result.checks.push_back(check("bar-discrete gap slope in band", band.contains(gap.fit.slope),
                                  "slope " + fmt(gap.fit.slope) + " band [" + fmt(band.lo) + ", " + fmt(band.hi) + "]"));
    Series residual_series{"gap minus averaging term", ks, residuals, std::nullopt, false};
    if (std::isfinite(gap.fit.slope)) {
        residual_series.fit = std::make_pair(gap.fit.slope, gap.fit.intercept);
    }
    Plot plot{"operator_gap_bar", "bar-discrete against continuum operator", "k", "int ||Lbar_k f - Lbar f||^2 dt",
              {Series{"gap", ks, gaps, std::nullopt, false}, residual_series}};
    result.plots.push_back(plot);

    if (c.random_gaps) {
        const GapVariant variant = c.alpha > 1.0 ? GapVariant::hat : GapVariant::scaled;
        const std::size_t S = c.seeds.size();
        std::string error;
        auto values = run_tasks<double>(
            c.k_list.size() * S, c.threads,
            [&](std::size_t task) {
                const Environment env(environment_spec(c, c.seeds[task % S]));
                return operator_gap_random(env, f, c.k_list[task / S], c.T, c.alpha, variant, c.half_width);
            },
            error);
        if (!error.empty()) {
            throw ExperimentAborted("operator-gaps worker failed: " + error, result);
        }
        std::vector<double> medians;
        const std::string name = variant == GapVariant::hat ? "random_gap_hat" : "random_gap_scaled";
        for (std::size_t ki = 0; ki < c.k_list.size(); ++ki) {
            std::vector<double> vals;
            for (std::size_t s = 0; s < S; ++s) {
                Measurement m = row(c, name, *values[ki * S + s]);
                m.k = c.k_list[ki];
                m.R = c.half_width;
                m.seed = static_cast<std::int64_t>(c.seeds[s] + c.seed_offset);
                result.rows.push_back(m);
                vals.push_back(*values[ki * S + s]);
            }
            medians.push_back(median(vals));
        }
        result.checks.push_back(check("median random gap strictly decreasing in k", strictly_decreasing(medians),
                                      "medians " + join_values(medians)));
        result.plots.push_back(Plot{"operator_gap_random", "random against bar-discrete operator", "k",
                                    "median gap", {Series{name, ks, medians, std::nullopt, false}}});
    }
    return result;
}

ExperimentResult poincare_suite(const ExperimentConfig& c)
{
    ExperimentResult result;
    result.experiment = c.name;
    const double t_max = 100.0;

    // good vertices: binomial band when w = K Z with i.i.d. Z
    const bool iid = c.environment == EnvironmentKind::static_iid && c.profile.is_constant();
    const double p = iid ? std::pow(exceedance(c.marginal, c.delta / c.profile.limit()), 2) : 0.0;
    bool all_above = true;
    std::string detail;
    for (int r : c.r_list) {
        for (std::uint64_t seed : c.seeds) {
            const Environment env(environment_spec(c, seed));
            const GoodVertexStats stats =
                good_vertex_survey(env, c.d, r, c.delta, c.samples, t_max, seed + c.seed_offset);
            const double volume = std::pow(2.0 * r, c.d);
            const double bound = p - 4.0 * std::sqrt(p * (1.0 - p) / volume);
            Measurement m = row(c, "good_vertex_min_fraction", stats.min_fraction);
            m.R = r;
            m.seed = static_cast<std::int64_t>(seed + c.seed_offset);
            result.rows.push_back(m);
            m.quantity = "good_vertex_mean_fraction";
            m.value = stats.mean_fraction;
            result.rows.push_back(m);
            all_above = all_above && stats.min_fraction >= 0.0 && stats.min_fraction <= 1.0;
            detail += "r=" + std::to_string(r) + ": min " + fmt(stats.min_fraction);
            if (iid) {
                all_above = all_above && stats.min_fraction >= bound;
                detail += " >= " + fmt(bound);
            }
            detail += "; ";
        }
    }
    result.checks.push_back(check(iid ? "good-vertex fractions above binomial band" : "good-vertex fractions in [0,1]",
                                  all_above, detail));

    // Poincare ratios of smooth mean-zero functions at the box scale
    std::vector<double> scales;
    std::vector<std::vector<double>> ratios;
    for (int r : c.r_list) {
        std::vector<double> vals;
        for (std::uint64_t seed : c.seeds) {
            const Environment env(environment_spec(c, seed));
            std::mt19937_64 rng(seed + c.seed_offset + 7919u * static_cast<std::uint64_t>(r));
            std::uniform_real_distribution<double> time(0.0, t_max);
            const Point y{};
            const Lattice ball = Lattice::integer_box(c.d, r, y);
            for (std::size_t draw = 0; draw < c.draws; ++draw) {
                std::vector<double> f = random_smooth(ball, y, r, rng);
                subtract_mean(f);
                const double ratio = poincare_ratio(env, c.d, c.alpha, time(rng), y, r, f);
                Measurement m = row(c, "poincare_ratio", ratio);
                m.R = r;
                m.seed = static_cast<std::int64_t>(seed + c.seed_offset);
                m.t = static_cast<double>(draw);
                result.rows.push_back(m);
                vals.push_back(ratio);
            }
        }
        scales.push_back(r);
        ratios.push_back(vals);
    }
    stability_checks(result, "poincare", scales, ratios, 50.0);

    // multi-scale constants with f = g - avg g
    std::vector<double> levels;
    std::vector<std::vector<double>> constants;
    for (int m : c.multiscale_levels) {
        std::vector<double> vals;
        const int n = m - c.multiscale_depth;
        const Lattice box = Lattice::integer_box(c.d, std::int64_t{1} << m);
        for (std::uint64_t seed : c.seeds) {
            const Environment env(environment_spec(c, seed));
            std::mt19937_64 rng(seed + c.seed_offset + 104729u * static_cast<std::uint64_t>(m));
            std::uniform_real_distribution<double> time(0.0, t_max);
            for (std::size_t draw = 0; draw < c.draws; ++draw) {
                const std::vector<double> g = random_smooth(box, Point{}, std::ldexp(1.0, m), rng);
                std::vector<double> f = g;
                subtract_mean(f);
                const MultiscaleGap gap = multiscale_poincare_gap(env, c.d, c.alpha, time(rng), m, n, f, g);
                Measurement row_m = row(c, "multiscale_constant", gap.constant);
                row_m.m = m;
                row_m.seed = static_cast<std::int64_t>(seed + c.seed_offset);
                row_m.t = static_cast<double>(draw);
                result.rows.push_back(row_m);
                vals.push_back(gap.constant);
            }
        }
        levels.push_back(m);
        constants.push_back(vals);
    }
    stability_checks(result, "multiscale", levels, constants, 50.0);

    std::vector<double> med_ratio;
    std::vector<double> med_const;
    for (const auto& v : ratios) {
        med_ratio.push_back(median(v));
    }
    for (const auto& v : constants) {
        med_const.push_back(median(v));
    }
    result.plots.push_back(Plot{"poincare", "empirical Poincare constants", "r or 2^m", "median constant",
                                {Series{"Poincare ratio (r)", scales, med_ratio, std::nullopt, false},
                                 Series{"multi-scale constant (2^m)",
                                        [&] {
                                            std::vector<double> x;
                                            for (double m : levels) {
                                                x.push_back(std::ldexp(1.0, static_cast<int>(m)));
                                            }
                                            return x;
                                        }(),
                                        med_const, std::nullopt, false}}});
    return result;
}

ExperimentResult cutoff_lemma(const ExperimentConfig& c)
{
    ExperimentResult result;
    result.experiment = c.name;
    const SmoothProfile f = test_profile(c);
    const double H = std::max(c.half_width, 16.0 * c.radii.back());
    const int ppu = c.grid_points_per_unit;
    const CutoffGap coarse = cutoff_gap(f, c.radii, c.alpha, c.profile.limit(), H, ppu);
    const CutoffGap fine = cutoff_gap(f, c.radii, c.alpha, c.profile.limit(), H, 2 * ppu);
    double worst_change = 0.0;
    for (std::size_t i = 0; i < c.radii.size(); ++i) {
        Measurement m = row(c, "cutoff_gap", fine.gaps[i]);
        m.R = c.radii[i];
        result.rows.push_back(m);
        m.quantity = "cutoff_gap_coarse_grid";
        m.value = coarse.gaps[i];
        result.rows.push_back(m);
        worst_change = std::max(worst_change, std::abs(fine.gaps[i] - coarse.gaps[i]) / fine.gaps[i]);
    }
    result.summary["cutoff_slope"] = fine.fit.slope;
    result.summary["resolution_change"] = worst_change;
    if (f.kind == SmoothProfile::Kind::polynomial_decay) {
        const double theory = -(c.d + 2.0 * f.beta);
        result.summary["theory_slope"] = theory;
        result.checks.push_back(check("cutoff gap slope in band", std::abs(fine.fit.slope - theory) <= 0.6,
                                      "slope " + fmt(fine.fit.slope) + " band [" + fmt(theory - 0.6) + ", " +
                                          fmt(theory + 0.6) + "]"));
    }
    result.checks.push_back(check("grid doubling changes G(R) by < 5%", worst_change < 0.05,
                                  "max relative change " + fmt(worst_change)));
    result.plots.push_back(Plot{"cutoff_lemma", "effect of the cutoff on the limit operator", "R", "G(R)",
                                {Series{"G(R)", fine.radii, fine.gaps, std::make_pair(fine.fit.slope, fine.fit.intercept),
                                        false}}});
    return result;
}

ExperimentResult time_change_check(const ExperimentConfig& c)
{
    ExperimentResult result;
    result.experiment = c.name;
    const int k = c.k_list.front();
    const Lattice lattice(c.d, k, c.half_width);
    const Field g = sample_profile(lattice, initial_bump(c));
    const double scale = std::pow(static_cast<double>(k), c.alpha);
    const MeanProfile& profile = c.profile;
    auto changed_clock = [&](double t) { return profile.integral(scale * t) / scale; };

    double worst = 0.0;
    double worst_bound = 0.0;
    bool pass = true;
    for (std::uint64_t seed : c.seeds) {
        const Environment env(environment_spec(c, seed));
        const JumpOperator op = JumpOperator::scaled(lattice, c.alpha, env, BoundaryMode::periodic);
        const JumpOperator changed = JumpOperator::scaled(lattice, c.alpha, env.time_change(), BoundaryMode::periodic);
        SolveParams up = c.solver;
        up.T = c.T;
        const Trajectory u = solve_parabolic(op, g, SourceSampler{}, up);
        SolveParams vp = c.solver;
        vp.T = changed_clock(c.T);
        vp.snapshots = 8 * c.solver.snapshots;
        const Trajectory v = solve_parabolic(changed, g, SourceSampler{}, vp);
        result.steps += u.steps + v.steps;

        // linear interpolation error bound from second differences of the stored snapshots
        double interp = 0.0;
        for (std::size_t j = 1; j + 1 < v.states.size(); ++j) {
            for (std::size_t i = 0; i < lattice.size(); ++i) {
                const double dd = v.states[j + 1].values[i] - 2.0 * v.states[j].values[i] + v.states[j - 1].values[i];
                interp = std::max(interp, std::abs(dd) / 8.0);
            }
        }
        double deviation = 0.0;
        for (std::size_t j = 0; j < u.times.size(); ++j) {
            const double tau = changed_clock(u.times[j]);
            const double pos = tau / vp.T * static_cast<double>(vp.snapshots);
            const auto lo = std::min<std::size_t>(static_cast<std::size_t>(std::floor(pos)), v.states.size() - 2);
            const double lambda = pos - static_cast<double>(lo);
            double dev = 0.0;
            for (std::size_t i = 0; i < lattice.size(); ++i) {
                const double vi = (1.0 - lambda) * v.states[lo].values[i] + lambda * v.states[lo + 1].values[i];
                dev = std::max(dev, std::abs(u.states[j].values[i] - vi));
            }
            Measurement m = row(c, "time_change_deviation", dev);
            m.k = k;
            m.seed = static_cast<std::int64_t>(seed + c.seed_offset);
            m.t = u.times[j];
            result.rows.push_back(m);
            deviation = std::max(deviation, dev);
        }
        const double dt = std::max(u.dt, v.dt);
        const double bound = 10.0 * (dt + interp);
        pass = pass && deviation <= bound;
        worst = std::max(worst, deviation);
        worst_bound = std::max(worst_bound, bound);
        result.summary["interpolation_tolerance"] = std::max(result.summary["interpolation_tolerance"], interp);
        result.summary["dt"] = std::max(result.summary["dt"], dt);
    }
    result.summary["max_deviation"] = worst;
    result.checks.push_back(check("time-change identity", pass,
                                  "max deviation " + fmt(worst) + " <= 10 (dt + interpolation) = " + fmt(worst_bound)));
    return result;
}

} // namespace rcm
