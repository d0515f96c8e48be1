#include "rcm/operators.hpp"

#include "rcm/errors.hpp"

#include <cmath>
#include <limits>
#include <list>
#include <mutex>
#include <stdexcept>

namespace rcm {

namespace {

constexpr std::size_t kMaxBonds = std::size_t{60} * 1000 * 1000;
constexpr std::size_t kCacheEntries = 4;

void check_lattice(const Lattice& expected, const Lattice& got)
{
    if (!expected.same_geometry(got)) {
        throw std::invalid_argument("field lattice does not match the operator lattice");
    }
}

} // namespace

std::string to_string(OperatorFamily family)
{
    switch (family) {
    case OperatorFamily::scaled:
        return "scaled";
    case OperatorFamily::regional:
        return "regional";
    case OperatorFamily::bar_discrete:
        return "bar_discrete";
    }
    return "unknown";
}

double compensator_indicator(double alpha, double length) noexcept
{
    if (alpha > 1.0) {
        return 1.0;
    }
    return length <= 1.0 ? 1.0 : 0.0;
}

struct JumpOperator::BondCache {
    std::mutex lock;
    std::list<std::pair<RandomSource, std::shared_ptr<const std::vector<double>>>> entries;
};

struct JumpOperator::Weights {
    double base = 0.0; ///< deterministic part of w
    double c[2] = {0.0, 0.0};
    const double* z[2] = {nullptr, nullptr};
    int random = 0;
    double mean = 0.0;
    std::shared_ptr<const std::vector<double>> hold[2];
};

JumpOperator::JumpOperator(const Lattice& lattice, double alpha, Environment env, BoundaryMode mode,
                           std::optional<double> radius)
    : family_(OperatorFamily::scaled),
      table_(std::make_shared<const KernelTable>(lattice, alpha, mode, radius)),
      env_(std::move(env)),
      time_scale_(std::pow(static_cast<double>(lattice.scale()), alpha)),
      cache_(std::make_shared<BondCache>())
{
    const std::size_t N = lattice.size();
    const std::size_t M = table_->size();
    if (N * M > kMaxBonds) {
        throw NumericalError("operator needs " + std::to_string(N * M) + " bonds; limit is " +
                             std::to_string(kMaxBonds));
    }
    if (N > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
        throw NumericalError("lattice too large for 32-bit neighbor indices");
    }
    neighbors_.assign(N * M, -1);
    canonical_.assign(N * M, 0);
    const int d = lattice.dim();
    const auto& offs = table_->offsets();
    for (std::size_t i = 0; i < N; ++i) {
        const Point p = lattice.grid_point(i);
        for (std::size_t o = 0; o < M; ++o) {
            Point q = p;
            for (int c = 0; c < d; ++c) {
                q[c] += offs[o].step[c];
            }
            std::optional<std::size_t> n;
            if (mode == BoundaryMode::periodic) {
                n = lattice.find(lattice.wrap(q));
            } else {
                n = lattice.find(q);
            }
            if (n) {
                neighbors_[i * M + o] = static_cast<std::int32_t>(*n);
                canonical_[i * M + o] = i < *n ? 1 : 0;
            }
        }
    }
}

JumpOperator JumpOperator::scaled(const Lattice& lattice, double alpha, Environment env, BoundaryMode mode,
                                  std::optional<double> radius)
{
    return JumpOperator(lattice, alpha, std::move(env), mode, radius);
}

JumpOperator JumpOperator::bar_discrete(const Lattice& lattice, double alpha, const MeanProfile& profile,
                                        BoundaryMode mode, std::optional<double> radius)
{
    EnvironmentSpec spec;
    spec.kind = EnvironmentKind::constant;
    spec.profile = profile;
    JumpOperator op(lattice, alpha, Environment(spec), mode, radius);
    op.family_ = OperatorFamily::bar_discrete;
    return op;
}

JumpOperator JumpOperator::regional(const Lattice& box, double alpha, Environment env)
{
    if (box.scale() != 1) {
        throw std::invalid_argument("regional operator lives on an integer box (k = 1)");
    }
    JumpOperator op(box, alpha, std::move(env), BoundaryMode::regional);
    op.family_ = OperatorFamily::regional;
    return op;
}

double JumpOperator::max_rate() const noexcept
{
    const double w_bound = env_.upper_bound();
    const double mean_bound = env_.mean_profile().upper_bound();
    const auto& offs = table_->offsets();
    const std::size_t M = offs.size();
    double best = 0.0;
    // only jumps that stay in the lattice count; regional boxes lose them near the boundary
    for (std::size_t i = 0; i < lattice().size(); ++i) {
        double row = 0.0;
        for (std::size_t o = 0; o < M; ++o) {
            if (neighbors_[i * M + o] >= 0) {
                row += offs[o].random * w_bound + offs[o].closure * mean_bound;
            }
        }
        best = std::max(best, row);
    }
    return best;
}

std::shared_ptr<const std::vector<double>> JumpOperator::bond_draws(const RandomSource& source) const
{
    {
        std::lock_guard<std::mutex> guard(cache_->lock);
        for (auto it = cache_->entries.begin(); it != cache_->entries.end(); ++it) {
            if (it->first == source) {
                cache_->entries.splice(cache_->entries.begin(), cache_->entries, it);
                return cache_->entries.front().second;
            }
        }
    }
    const Lattice& lat = lattice();
    const std::size_t N = lat.size();
    const std::size_t M = table_->size();
    const int d = lat.dim();
    const auto& offs = table_->offsets();
    auto draws = std::make_shared<std::vector<double>>(N * M, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        const Point p = lat.grid_point(i);
        for (std::size_t o = 0; o < M; ++o) {
            const std::size_t bond = i * M + o;
            if (!canonical_[bond]) {
                continue;
            }
            Point q = p;
            for (int c = 0; c < d; ++c) {
                q[c] += offs[o].step[c];
            }
            const bool ordered = lex_less(p, q);
            const double value = env_.draw(source, ordered ? p : q, ordered ? q : p);
            const auto n = static_cast<std::size_t>(neighbors_[bond]);
            (*draws)[bond] = value;
            (*draws)[n * M + offs[o].opposite] = value;
        }
    }
    std::lock_guard<std::mutex> guard(cache_->lock);
    cache_->entries.emplace_front(source, draws);
    while (cache_->entries.size() > kCacheEntries) {
        cache_->entries.pop_back();
    }
    return draws;
}

JumpOperator::Weights JumpOperator::weights(double t) const
{
    if (!(t >= 0.0)) {
        throw std::invalid_argument("operator time must be >= 0");
    }
    const double s = time_scale_ * t;
    const EnvironmentSlice slice = env_.slice(s);
    Weights w;
    w.mean = env_.mean_profile()(s);
    for (int i = 0; i < 2; ++i) {
        if (slice.coeff[i] == 0.0) {
            continue;
        }
        if (slice.source[i].deterministic()) {
            w.base += slice.coeff[i];
        } else {
            w.hold[w.random] = bond_draws(slice.source[i]);
            w.z[w.random] = w.hold[w.random]->data();
            w.c[w.random] = slice.coeff[i];
            ++w.random;
        }
    }
    return w;
}

double JumpOperator::rate(double t, std::size_t site, std::size_t offset) const
{
    const Weights w = weights(t);
    const std::size_t bond = site * table_->size() + offset;
    double value = w.base;
    for (int r = 0; r < w.random; ++r) {
        value += w.c[r] * w.z[r][bond];
    }
    const auto& off = table_->offsets()[offset];
    return off.random * value + off.closure * w.mean;
}

namespace {

template <int R>
inline double conductance(double base, const double* c, const double* const* z, std::size_t bond) noexcept
{
    if constexpr (R == 0) {
        return base;
    } else if constexpr (R == 1) {
        return base + c[0] * z[0][bond];
    } else {
        return base + c[0] * z[0][bond] + c[1] * z[1][bond];
    }
}

template <int R>
void apply_kernel(const std::vector<KernelOffset>& offs, const std::int32_t* nbr, double base, const double* c,
                  const double* const* z, double mean, std::span<const double> f, std::span<double> out)
{
    const std::size_t M = offs.size();
    std::vector<double> closure(M);
    std::vector<double> random(M);
    for (std::size_t o = 0; o < M; ++o) {
        random[o] = offs[o].random;
        closure[o] = offs[o].closure * mean;
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double fi = f[i];
        const std::int32_t* row = nbr + i * M;
        double acc = 0.0;
        for (std::size_t o = 0; o < M; ++o) {
            const std::int32_t n = row[o];
            if (n < 0) {
                continue;
            }
            const double w = conductance<R>(base, c, z, i * M + o);
            acc += (random[o] * w + closure[o]) * (f[static_cast<std::size_t>(n)] - fi);
        }
        out[i] = acc;
    }
}

} // namespace

void JumpOperator::apply(double t, std::span<const double> f, std::span<double> out) const
{
    const std::size_t N = lattice().size();
    if (f.size() != N || out.size() != N) {
        throw std::invalid_argument("operator input/output size does not match the lattice");
    }
    const Weights w = weights(t);
    const auto& offs = table_->offsets();
    switch (w.random) {
    case 0:
        apply_kernel<0>(offs, neighbors_.data(), w.base, w.c, w.z, w.mean, f, out);
        break;
    case 1:
        apply_kernel<1>(offs, neighbors_.data(), w.base, w.c, w.z, w.mean, f, out);
        break;
    default:
        apply_kernel<2>(offs, neighbors_.data(), w.base, w.c, w.z, w.mean, f, out);
        break;
    }
}

Field JumpOperator::apply(double t, const Field& f) const
{
    check_lattice(lattice(), f.lattice);
    Field out(f.lattice, f.components, f.time);
    for (int c = 0; c < f.components; ++c) {
        apply(t, f.component(c), out.component(c));
    }
    return out;
}

Field JumpOperator::apply_hat(double t, const Field& f, const Field& grad) const
{
    check_lattice(lattice(), f.lattice);
    const int d = lattice().dim();
    if (f.components != 1) {
        throw std::invalid_argument("apply_hat takes a scalar field");
    }
    if (grad.components != d || !grad.lattice.same_geometry(f.lattice)) {
        throw std::invalid_argument("apply_hat needs a gradient field with d components on the same lattice");
    }
    Field out = apply(t, f);
    const Weights w = weights(t);
    const auto& offs = table_->offsets();
    const std::size_t M = offs.size();
    const double a = alpha();
    for (std::size_t i = 0; i < f.size(); ++i) {
        double comp = 0.0;
        for (std::size_t o = 0; o < M; ++o) {
            const std::size_t bond = i * M + o;
            if (neighbors_[bond] < 0) {
                continue;
            }
            const double chi = compensator_indicator(a, offs[o].length);
            if (chi == 0.0) {
                continue;
            }
            double g = 0.0;
            for (int c = 0; c < d; ++c) {
                g += grad.at(i, c) * offs[o].z[c];
            }
            double cond = w.base;
            for (int r = 0; r < w.random; ++r) {
                cond += w.c[r] * w.z[r][bond];
            }
            comp += offs[o].random * cond * g;
        }
        out.at(i) -= comp;
    }
    return out;
}

double JumpOperator::energy(double t, std::span<const double> f) const
{
    const std::size_t N = lattice().size();
    if (f.size() != N) {
        throw std::invalid_argument("energy: field size does not match the lattice");
    }
    const Weights w = weights(t);
    const auto& offs = table_->offsets();
    const std::size_t M = offs.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t o = 0; o < M; ++o) {
            const std::size_t bond = i * M + o;
            const std::int32_t n = neighbors_[bond];
            if (n < 0) {
                continue;
            }
            double cond = w.base;
            for (int r = 0; r < w.random; ++r) {
                cond += w.c[r] * w.z[r][bond];
            }
            const double diff = f[static_cast<std::size_t>(n)] - f[i];
            sum += (offs[o].random * cond + offs[o].closure * w.mean) * diff * diff;
        }
    }
    return 0.5 * sum;
}

double JumpOperator::energy(double t, const Field& f) const
{
    check_lattice(lattice(), f.lattice);
    double sum = 0.0;
    for (int c = 0; c < f.components; ++c) {
        sum += energy(t, f.component(c));
    }
    return sum;
}

double dirichlet_energy(const Environment& env, const Lattice& box, double alpha, double t, std::span<const double> f)
{
    if (box.scale() != 1) {
        throw std::invalid_argument("dirichlet_energy works on integer boxes (k = 1)");
    }
    if (f.size() != box.size()) {
        throw std::invalid_argument("dirichlet_energy: field size does not match the box");
    }
    const int d = box.dim();
    const double s = d + alpha;
    double sum = 0.0;
    for (std::size_t i = 0; i < box.size(); ++i) {
        const Point x = box.grid_point(i);
        for (std::size_t j = i + 1; j < box.size(); ++j) {
            const Point y = box.grid_point(j);
            double r2 = 0.0;
            for (int c = 0; c < d; ++c) {
                r2 += static_cast<double>((x[c] - y[c]) * (x[c] - y[c]));
            }
            const double diff = f[i] - f[j];
            sum += diff * diff * env.w(t, x, y) * std::pow(r2, -0.5 * s);
        }
    }
    return sum;
}

} // namespace rcm
