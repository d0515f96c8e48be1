#include "rcm/testfn.hpp"

#include "rcm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace rcm {

Jet Jet::operator*(const Jet& g) const
{
    const Jet& f = *this;
    Jet out;
    out.value = f.value * g.value;
    for (int i = 0; i < 3; ++i) {
        out.grad[i] = f.grad[i] * g.value + f.value * g.grad[i];
        for (int j = 0; j < 3; ++j) {
            out.hess[i][j] = f.hess[i][j] * g.value + f.grad[i] * g.grad[j] + f.grad[j] * g.grad[i] +
                             f.value * g.hess[i][j];
            for (int k = 0; k < 3; ++k) {
                out.third[i][j][k] = f.third[i][j][k] * g.value + f.hess[i][j] * g.grad[k] + f.hess[i][k] * g.grad[j] +
                                     f.hess[j][k] * g.grad[i] + f.grad[i] * g.hess[j][k] + f.grad[j] * g.hess[i][k] +
                                     f.grad[k] * g.hess[i][j] + f.value * g.third[i][j][k];
            }
        }
    }
    return out;
}

Jet& Jet::operator*=(double s)
{
    value *= s;
    for (int i = 0; i < 3; ++i) {
        grad[i] *= s;
        for (int j = 0; j < 3; ++j) {
            hess[i][j] *= s;
            for (int k = 0; k < 3; ++k) {
                third[i][j][k] *= s;
            }
        }
    }
    return *this;
}

namespace {

/// Jet of F(|r|^2) from F and its first three derivatives in s.
Jet radial_jet(const std::array<double, 4>& F, const std::array<double, 3>& r, int d)
{
    Jet out;
    out.value = F[0];
    for (int i = 0; i < d; ++i) {
        out.grad[i] = 2.0 * F[1] * r[i];
        for (int j = 0; j < d; ++j) {
            out.hess[i][j] = 4.0 * F[2] * r[i] * r[j] + (i == j ? 2.0 * F[1] : 0.0);
            for (int k = 0; k < d; ++k) {
                double t = 8.0 * F[3] * r[i] * r[j] * r[k];
                if (i == j) {
                    t += 4.0 * F[2] * r[k];
                }
                if (i == k) {
                    t += 4.0 * F[2] * r[j];
                }
                if (j == k) {
                    t += 4.0 * F[2] * r[i];
                }
                out.third[i][j][k] = t;
            }
        }
    }
    return out;
}

double bridge(double tau) noexcept
{
    return tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

double bridge_d1(double tau) noexcept
{
    return 30.0 * tau * tau * (1.0 - tau) * (1.0 - tau);
}

double bridge_d2(double tau) noexcept
{
    return 60.0 * tau - 180.0 * tau * tau + 120.0 * tau * tau * tau;
}

/// phi(r): 1 for r <= 1, 0 for r >= 2.
double shifted_cutoff(double r) noexcept
{
    if (r <= 1.0) {
        return 1.0;
    }
    if (r >= 2.0) {
        return 0.0;
    }
    return 1.0 - bridge(r - 1.0);
}

} // namespace

Jet SmoothProfile::jet(const Vec& x) const
{
    std::array<double, 3> r{};
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
        r[c] = x[c] - center[c];
        s += r[c] * r[c];
    }
    std::array<double, 4> F{};
    switch (kind) {
    case Kind::compact_bump: {
        const double r2 = radius * radius;
        const double u = 1.0 - s / r2;
        if (u <= 0.0) {
            return Jet{};
        }
        const double phi = std::exp(1.0 - 1.0 / u);
        const double iu = 1.0 / u;
        const double d1 = phi * iu * iu;
        const double d2 = phi * (std::pow(iu, 4) - 2.0 * std::pow(iu, 3));
        const double d3 = phi * (std::pow(iu, 6) - 6.0 * std::pow(iu, 5) + 6.0 * std::pow(iu, 4));
        const double ds = -1.0 / r2;
        F = {phi, d1 * ds, d2 * ds * ds, d3 * ds * ds * ds};
        break;
    }
    case Kind::gaussian: {
        const double a = -1.0 / (radius * radius);
        const double e = std::exp(a * s);
        F = {e, a * e, a * a * e, a * a * a * e};
        break;
    }
    case Kind::polynomial_decay: {
        const double q = 0.5 * (d + beta);
        const double b = 1.0 + s;
        F = {std::pow(b, -q), -q * std::pow(b, -q - 1.0), q * (q + 1.0) * std::pow(b, -q - 2.0),
             -q * (q + 1.0) * (q + 2.0) * std::pow(b, -q - 3.0)};
        break;
    }
    }
    Jet out = radial_jet(F, r, d);
    if (omega != 0.0) {
        Jet mod;
        const double arg = omega * x[0] + phase;
        const double c = std::cos(arg);
        const double sn = std::sin(arg);
        mod.value = c;
        mod.grad[0] = -omega * sn;
        mod.hess[0][0] = -omega * omega * c;
        mod.third[0][0][0] = omega * omega * omega * sn;
        out = out * mod;
    }
    out *= amplitude;
    return out;
}

double SmoothProfile::support_radius() const noexcept
{
    return kind == Kind::compact_bump ? radius : std::numeric_limits<double>::infinity();
}

std::string to_string(SmoothProfile::Kind kind)
{
    switch (kind) {
    case SmoothProfile::Kind::compact_bump:
        return "compact_bump";
    case SmoothProfile::Kind::gaussian:
        return "gaussian";
    case SmoothProfile::Kind::polynomial_decay:
        return "polynomial_decay";
    }
    return "unknown";
}

SmoothProfile::Kind profile_kind_from_string(const std::string& name)
{
    for (auto kind : {SmoothProfile::Kind::compact_bump, SmoothProfile::Kind::gaussian,
                      SmoothProfile::Kind::polynomial_decay}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw ConfigError("unknown profile kind '" + name + "'");
}

std::string SmoothProfile::describe() const
{
    std::ostringstream out;
    out << to_string(kind) << "(d=" << d << ", A=" << amplitude << ", r=" << radius;
    if (kind == Kind::polynomial_decay) {
        out << ", beta=" << beta;
    }
    if (omega != 0.0) {
        out << ", omega=" << omega << ", phase=" << phase;
    }
    out << ")";
    return out.str();
}

SmoothProfile make_initial_g(const SmoothProfile& profile)
{
    if (profile.kind != SmoothProfile::Kind::compact_bump) {
        throw ConfigError("initial datum must be compactly supported (compact_bump), got " + to_string(profile.kind));
    }
    if (!(profile.radius > 0.0)) {
        throw ConfigError("initial datum needs a positive support radius");
    }
    return profile;
}

DecayCertificate decay_certificate(const SmoothProfile& profile, double beta)
{
    const int d = profile.d;
    std::vector<Vec> directions;
    for (int c = 0; c < d; ++c) {
        Vec e{};
        e[c] = 1.0;
        directions.push_back(e);
        e[c] = -1.0;
        directions.push_back(e);
    }
    if (d > 1) {
        Vec e{};
        for (int c = 0; c < d; ++c) {
            e[c] = 1.0 / std::sqrt(static_cast<double>(d));
        }
        directions.push_back(e);
    }
    constexpr int kPoints = 601;
    constexpr double kMaxRadius = 1e4;
    std::vector<double> weighted(kPoints, 0.0);
    std::vector<double> radii(kPoints, 0.0);
    for (int p = 0; p < kPoints; ++p) {
        // r = 0 and then log spacing over [1e-2, 1e4]
        radii[p] = p == 0 ? 0.0 : std::pow(10.0, -2.0 + 6.0 * (p - 1) / (kPoints - 2));
    }
    for (int p = 0; p < kPoints; ++p) {
        for (const Vec& e : directions) {
            Vec x{};
            for (int c = 0; c < d; ++c) {
                x[c] = profile.center[c] + radii[p] * e[c];
            }
            const Jet j = profile.jet(x);
            double g2 = 0.0;
            double h2 = 0.0;
            double t2 = 0.0;
            for (int a = 0; a < d; ++a) {
                g2 += j.grad[a] * j.grad[a];
                for (int b = 0; b < d; ++b) {
                    h2 += j.hess[a][b] * j.hess[a][b];
                    for (int c = 0; c < d; ++c) {
                        t2 += j.third[a][b][c] * j.third[a][b][c];
                    }
                }
            }
            const double size = std::max({std::abs(j.value), std::sqrt(g2), std::sqrt(h2), std::sqrt(t2)});
            double xn = 0.0;
            for (int c = 0; c < d; ++c) {
                xn += x[c] * x[c];
            }
            const double w = size * std::pow(1.0 + std::sqrt(xn), d + beta);
            weighted[p] = std::max(weighted[p], w);
        }
    }
    DecayCertificate cert;
    cert.radius_max = kMaxRadius;
    for (double w : weighted) {
        cert.constant = std::max(cert.constant, w);
    }
    // last decade against the one before it
    const int decade = (kPoints - 2) / 6;
    double last = 0.0;
    double previous = 0.0;
    for (int p = kPoints - decade; p < kPoints; ++p) {
        last = std::max(last, weighted[p]);
    }
    for (int p = kPoints - 2 * decade; p < kPoints - decade; ++p) {
        previous = std::max(previous, weighted[p]);
    }
    cert.decays = std::isfinite(cert.constant) && last <= 1.5 * previous + 1e-300;
    return cert;
}

double cutoff_profile(double r) noexcept
{
    if (r <= 0.5) {
        return 1.0;
    }
    if (r >= 1.0) {
        return 0.0;
    }
    return 1.0 - bridge(2.0 * r - 1.0);
}

Jet cutoff_psi(double R, const Vec& x, int d)
{
    if (!(R >= 1.0)) {
        throw std::invalid_argument("cutoff_psi needs R >= 1");
    }
    double rho2 = 0.0;
    for (int c = 0; c < d; ++c) {
        rho2 += x[c] * x[c];
    }
    const double rho = std::sqrt(rho2);
    Jet out;
    if (rho <= 0.5 * R) {
        out.value = 1.0;
        return out;
    }
    if (rho >= R) {
        return out;
    }
    const double tau = 2.0 * rho / R - 1.0;
    out.value = 1.0 - bridge(tau);
    const double g1 = -2.0 * bridge_d1(tau) / R;
    const double g2 = -4.0 * bridge_d2(tau) / (R * R);
    for (int i = 0; i < d; ++i) {
        out.grad[i] = g1 * x[i] / rho;
        for (int j = 0; j < d; ++j) {
            const double xx = x[i] * x[j] / rho2;
            out.hess[i][j] = g2 * xx + g1 * ((i == j ? 1.0 : 0.0) - xx) / rho;
        }
    }
    return out;
}

std::vector<double> sample_values(const Lattice& lattice, const SmoothProfile& p)
{
    std::vector<double> out(lattice.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = p(lattice.position(i));
    }
    return out;
}

Field sample_profile(const Lattice& lattice, const SmoothProfile& p)
{
    Field out(lattice);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        out.at(i) = p(lattice.position(i));
    }
    return out;
}

Field sample_gradient(const Lattice& lattice, const SmoothProfile& p)
{
    Field out(lattice, lattice.dim());
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        const Jet j = p.jet(lattice.position(i));
        for (int c = 0; c < lattice.dim(); ++c) {
            out.at(i, c) = j.grad[c];
        }
    }
    return out;
}

void SourceTerm::build_nodes(int nodes, const std::function<void(double, std::span<double>)>& exact_h)
{
    if (nodes < 64) {
        throw std::invalid_argument("source terms need at least 64 time nodes");
    }
    h_nodes_.assign(static_cast<std::size_t>(nodes), std::vector<double>(grid_.size()));
    for (int j = 0; j < nodes; ++j) {
        exact_h(T_ * j / (nodes - 1), h_nodes_[static_cast<std::size_t>(j)]);
    }
}

void SourceTerm::sample(double t, std::span<double> out) const
{
    if (out.size() != grid_.size()) {
        throw std::invalid_argument("source sample: size mismatch");
    }
    const auto n = static_cast<std::int64_t>(h_nodes_.size());
    const double step = T_ / static_cast<double>(n - 1);
    const double pos = std::clamp(t / step, 0.0, static_cast<double>(n - 1));
    auto first = static_cast<std::int64_t>(std::floor(pos)) - 1;
    first = std::clamp<std::int64_t>(first, 0, n - 4);
    double weight[4];
    for (int a = 0; a < 4; ++a) {
        double w = 1.0;
        for (int b = 0; b < 4; ++b) {
            if (a != b) {
                w *= (pos - static_cast<double>(first + b)) / static_cast<double>(a - b);
            }
        }
        weight[a] = w;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = 0.0;
        for (int a = 0; a < 4; ++a) {
            v += weight[a] * h_nodes_[static_cast<std::size_t>(first + a)][i];
        }
        out[i] = v;
    }
}

void SourceTerm::sample(double t, const Lattice& lattice, std::span<double> out) const
{
    if (out.size() != lattice.size()) {
        throw std::invalid_argument("source sample: size mismatch");
    }
    std::vector<double> full(grid_.size());
    sample(t, full);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        out[i] = full[torus_index(grid_, lattice, i)];
    }
}

void SourceTerm::target(double t, std::span<double> out) const
{
    (*target_)(t, out);
}

std::vector<double> SourceTerm::initial() const
{
    std::vector<double> out(grid_.size());
    target(0.0, out);
    return out;
}

SourceTerm SourceTerm::modulated(const Lattice& grid, double alpha, double K, double T, const SmoothProfile& p,
                                 double a0, double a1, double beta, int nodes)
{
    const DecayCertificate cert = decay_certificate(p, beta);
    if (!cert.decays) {
        std::ostringstream msg;
        msg << "profile " << p.describe() << " violates the decay envelope (1+|x|)^{-d-" << beta << "}";
        throw ConfigError(msg.str());
    }
    SourceTerm s(grid);
    s.T_ = T;
    s.alpha_ = alpha;
    s.K_ = K;
    s.decay_C0_ = cert.constant;
    std::ostringstream desc;
    desc << "(" << a0 << " + " << a1 << " t) " << p.describe();
    s.description_ = desc.str();
    auto values = std::make_shared<const std::vector<double>>(sample_values(grid, p));
    auto lp = std::make_shared<std::vector<double>>(grid.size());
    SpectralTorus torus(grid);
    torus.fractional(*values, *lp, alpha, K);
    s.build_nodes(nodes, [&](double t, std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = a1 * (*values)[i] - (a0 + a1 * t) * (*lp)[i];
        }
    });
    s.target_ = std::make_shared<const std::function<void(double, std::span<double>)>>(
        [values, a0, a1](double t, std::span<double> out) {
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = (a0 + a1 * t) * (*values)[i];
            }
        });
    return s;
}

namespace {

/// Exact torus evaluation of U(t) = P_t g + int_0^t P_{t-s} q ds and of the
/// cut-off quantities built from it.
struct DuhamelState {
    std::size_t points = 0;
    double alpha;
    double K;
    std::vector<std::complex<double>> g_hat;
    std::vector<std::complex<double>> q_hat;
    std::vector<double> q;
    std::vector<double> phi;
    std::vector<double> symbol;

    void U(SpectralTorus& torus, double t, std::span<double> u, std::span<double> lu) const
    {
        std::vector<std::complex<double>> spec(g_hat.size());
        std::vector<std::complex<double>> lspec(g_hat.size());
        for (std::size_t m = 0; m < spec.size(); ++m) {
            const double s = symbol[m];
            const double e = std::exp(s * t);
            const double duhamel = s == 0.0 ? t : std::expm1(s * t) / s;
            spec[m] = e * g_hat[m] + duhamel * q_hat[m];
            lspec[m] = s * spec[m];
        }
        torus.backward(spec, u);
        torus.backward(lspec, lu);
    }
};

} // namespace

SourceTerm SourceTerm::cutoff_duhamel(const Lattice& grid, double alpha, double K, double T, const SmoothProfile& g,
                                      std::optional<SmoothProfile> q, double n, int nodes)
{
    make_initial_g(g);
    if (!(n >= 0.0) || n + 2.0 >= grid.half_width()) {
        std::ostringstream msg;
        msg << "cut-off radius n + 2 = " << n + 2.0 << " must stay inside the torus half-length " << grid.half_width();
        throw ConfigError(msg.str());
    }
    auto state = std::make_shared<DuhamelState>();
    state->points = grid.size();
    state->alpha = alpha;
    state->K = K;
    SpectralTorus torus(grid);
    const double c = K * stable_constant(grid.dim(), alpha);
    state->symbol.resize(torus.modes());
    for (std::size_t m = 0; m < torus.modes(); ++m) {
        const double xi = torus.wavenumber_norms()[m];
        state->symbol[m] = xi == 0.0 ? 0.0 : -c * std::pow(xi, alpha);
    }
    state->g_hat.resize(torus.modes());
    state->q_hat.assign(torus.modes(), 0.0);
    torus.forward(sample_values(grid, g), state->g_hat);
    state->q.assign(grid.size(), 0.0);
    if (q) {
        state->q = sample_values(grid, *q);
        torus.forward(state->q, state->q_hat);
    }
    state->phi.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec x = grid.position(i);
        double r2 = 0.0;
        for (int a = 0; a < grid.dim(); ++a) {
            r2 += x[a] * x[a];
        }
        state->phi[i] = shifted_cutoff(std::sqrt(r2) - n);
    }

    SourceTerm s(grid);
    s.T_ = T;
    s.alpha_ = alpha;
    s.K_ = K;
    std::ostringstream desc;
    desc << "cut-off Duhamel source, n=" << n << ", g=" << g.describe();
    if (q) {
        desc << ", q=" << q->describe();
    }
    s.description_ = desc.str();

    std::vector<double> u(grid.size());
    std::vector<double> lu(grid.size());
    std::vector<double> phiu(grid.size());
    std::vector<double> lphiu(grid.size());
    double sup = 0.0;
    s.build_nodes(nodes, [&](double t, std::span<double> out) {
        state->U(torus, t, u, lu);
        for (std::size_t i = 0; i < u.size(); ++i) {
            phiu[i] = state->phi[i] * u[i];
            sup = std::max(sup, std::abs(phiu[i]));
        }
        torus.fractional(phiu, lphiu, alpha, K);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = state->phi[i] * (lu[i] + state->q[i]) - lphiu[i];
        }
    });
    s.decay_C0_ = sup;

    auto shared_torus = std::make_shared<SpectralTorus>(grid);
    auto lock = std::make_shared<std::mutex>();
    s.target_ = std::make_shared<const std::function<void(double, std::span<double>)>>(
        [state, shared_torus, lock](double t, std::span<double> out) {
            std::vector<double> uu(state->points);
            std::vector<double> lu2(state->points);
            std::lock_guard<std::mutex> guard(*lock);
            state->U(*shared_torus, t, uu, lu2);
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = state->phi[i] * uu[i];
            }
        });
    return s;
}

SourceTerm SourceTerm::zero(const Lattice& grid, double alpha, double K, double T, const SmoothProfile& g)
{
    auto state = std::make_shared<DuhamelState>();
    state->points = grid.size();
    state->alpha = alpha;
    state->K = K;
    auto torus = std::make_shared<SpectralTorus>(grid);
    const double c = K * stable_constant(grid.dim(), alpha);
    state->symbol.resize(torus->modes());
    for (std::size_t m = 0; m < torus->modes(); ++m) {
        const double xi = torus->wavenumber_norms()[m];
        state->symbol[m] = xi == 0.0 ? 0.0 : -c * std::pow(xi, alpha);
    }
    state->g_hat.resize(torus->modes());
    state->q_hat.assign(torus->modes(), 0.0);
    torus->forward(sample_values(grid, g), state->g_hat);

    SourceTerm s(grid);
    s.T_ = T;
    s.alpha_ = alpha;
    s.K_ = K;
    s.description_ = "zero source, g=" + g.describe();
    s.h_nodes_.assign(4, std::vector<double>(grid.size(), 0.0));
    auto lock = std::make_shared<std::mutex>();
    // f(t) = P_t g
    s.target_ = std::make_shared<const std::function<void(double, std::span<double>)>>(
        [state, torus, lock](double t, std::span<double> out) {
            std::vector<double> lu(state->points);
            std::lock_guard<std::mutex> guard(*lock);
            state->U(*torus, t, out, lu);
        });
    return s;
}

} // namespace rcm
