#include "rcm/environment.hpp"

#include "rcm/errors.hpp"
#include "rcm/philox.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rcm {

namespace {

constexpr std::int64_t kCoordLimit = std::int64_t{1} << 20;

std::uint64_t pack(const Point& p)
{
    std::uint64_t out = 0;
    for (int c = 0; c < kMaxDim; ++c) {
        if (p[c] <= -kCoordLimit || p[c] >= kCoordLimit) {
            throw std::out_of_range("environment coordinates must satisfy |x_i| < 2^20");
        }
        out = (out << 21) | static_cast<std::uint64_t>(p[c] + kCoordLimit);
    }
    return out;
}

double to_unit(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

} // namespace

MarginalLaw MarginalLaw::uniform02()
{
    return MarginalLaw(Kind::uniform02, 0.0, 0.0, 2.0);
}

MarginalLaw MarginalLaw::bernoulli(double q)
{
    if (!(q >= 0.0 && q < 1.0)) {
        throw ConfigError("bernoulli marginal needs q in [0,1), got " + std::to_string(q));
    }
    return MarginalLaw(Kind::bernoulli, q, 0.0, 1.0 / (1.0 - q));
}

MarginalLaw MarginalLaw::two_point(double lo, double hi)
{
    if (!(lo >= 0.0 && lo < 1.0 && hi > 1.0 && std::isfinite(hi))) {
        std::ostringstream msg;
        msg << "two-point marginal needs 0 <= lo < 1 < hi, got lo=" << lo << ", hi=" << hi;
        throw ConfigError(msg.str());
    }
    return MarginalLaw(Kind::two_point, (hi - 1.0) / (hi - lo), lo, hi);
}

double MarginalLaw::upper_bound() const noexcept
{
    return hi_;
}

double MarginalLaw::mean() const noexcept
{
    switch (kind_) {
    case Kind::uniform02:
        return 0.5 * (lo_ + hi_);
    case Kind::bernoulli:
    case Kind::two_point:
        return q_ * lo_ + (1.0 - q_) * hi_;
    }
    return 1.0;
}

double MarginalLaw::variance() const noexcept
{
    switch (kind_) {
    case Kind::uniform02:
        return (hi_ - lo_) * (hi_ - lo_) / 12.0;
    case Kind::bernoulli:
    case Kind::two_point:
        return q_ * (1.0 - q_) * (hi_ - lo_) * (hi_ - lo_);
    }
    return 0.0;
}

double MarginalLaw::quantile(double u) const noexcept
{
    switch (kind_) {
    case Kind::uniform02:
        return lo_ + (hi_ - lo_) * u;
    case Kind::bernoulli:
    case Kind::two_point:
        return u < q_ ? lo_ : hi_;
    }
    return 1.0;
}

std::string MarginalLaw::describe() const
{
    std::ostringstream out;
    switch (kind_) {
    case Kind::uniform02:
        out << "uniform02";
        break;
    case Kind::bernoulli:
        out << "bernoulli(q=" << q_ << ")";
        break;
    case Kind::two_point:
        out << "two_point(lo=" << lo_ << ", hi=" << hi_ << ")";
        break;
    }
    return out.str();
}

MeanProfile MeanProfile::constant(double K)
{
    if (!(K > 0.0) || !std::isfinite(K)) {
        throw ConfigError("mean profile constant must be positive, got " + std::to_string(K));
    }
    return MeanProfile(Kind::constant, K, 0.0, 0.0);
}

MeanProfile MeanProfile::decaying(double K, double A, double rho)
{
    if (!(K > 0.0) || !std::isfinite(K) || !std::isfinite(A)) {
        throw ConfigError("decaying mean profile needs a positive finite limit K");
    }
    if (!(rho > 0.5) || !std::isfinite(rho)) {
        throw ConfigError("decaying mean profile needs rho > 1/2, got " + std::to_string(rho));
    }
    if (!(K + A > 0.0)) {
        std::ostringstream msg;
        msg << "decaying mean profile must stay positive: K + A = " << K + A;
        throw ConfigError(msg.str());
    }
    return MeanProfile(Kind::decaying, K, A, rho);
}

double MeanProfile::operator()(double t) const noexcept
{
    if (kind_ == Kind::constant) {
        return K_;
    }
    return K_ + A_ * std::pow(1.0 + t, -rho_);
}

double MeanProfile::derivative(double t) const noexcept
{
    if (kind_ == Kind::constant) {
        return 0.0;
    }
    return -A_ * rho_ * std::pow(1.0 + t, -rho_ - 1.0);
}

double MeanProfile::lower_bound() const noexcept
{
    return std::min(K_, K_ + A_);
}

double MeanProfile::upper_bound() const noexcept
{
    return std::max(K_, K_ + A_);
}

double MeanProfile::integral(double t) const noexcept
{
    if (kind_ == Kind::constant) {
        return K_ * t;
    }
    if (rho_ == 1.0) {
        return K_ * t + A_ * std::log1p(t);
    }
    return K_ * t + A_ * std::expm1((1.0 - rho_) * std::log1p(t)) / (1.0 - rho_);
}

double MeanProfile::inverse_integral(double s) const
{
    if (s < 0.0) {
        throw std::invalid_argument("inverse_integral needs s >= 0");
    }
    if (s == 0.0) {
        return 0.0;
    }
    if (kind_ == Kind::constant) {
        return s / K_;
    }
    // a is increasing with K1 <= a' <= K2
    double lo = s / upper_bound();
    double hi = s / lower_bound();
    const double tol = 1e-13 * std::max(1.0, s);
    auto residual = [&](double t) { return integral(t) - s; };
    auto stop = [&](double a, double b) { return std::abs(b - a) * upper_bound() <= tol; };
    auto [left, right] = boost::math::tools::bisect(residual, lo, hi, stop);
    return 0.5 * (left + right);
}

std::string MeanProfile::describe() const
{
    std::ostringstream out;
    if (kind_ == Kind::constant) {
        out << "constant(K=" << K_ << ")";
    } else {
        out << "decaying(K=" << K_ << ", A=" << A_ << ", rho=" << rho_ << ")";
    }
    return out.str();
}

double pi_term(const MeanProfile& profile, double t)
{
    if (!(t > 0.0)) {
        throw std::invalid_argument("pi_term needs t > 0");
    }
    if (profile.is_constant()) {
        return 0.0;
    }
    const double A = profile.amplitude();
    const double e = 1.0 - 2.0 * profile.rate();
    // A^2 [(1+t)^{1-2rho} - 1] / ((1-2rho) t)
    return A * A * std::expm1(e * std::log1p(t)) / (e * t);
}

std::string to_string(EnvironmentKind kind)
{
    switch (kind) {
    case EnvironmentKind::constant:
        return "constant";
    case EnvironmentKind::static_iid:
        return "static_iid";
    case EnvironmentKind::piecewise_linear:
        return "piecewise_linear";
    case EnvironmentKind::trigonometric:
        return "trigonometric";
    case EnvironmentKind::modulated_static:
        return "modulated_static";
    }
    return "unknown";
}

EnvironmentKind environment_kind_from_string(const std::string& name)
{
    for (auto kind : {EnvironmentKind::constant, EnvironmentKind::static_iid, EnvironmentKind::piecewise_linear,
                      EnvironmentKind::trigonometric, EnvironmentKind::modulated_static}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw ConfigError("unknown environment kind '" + name + "'");
}

bool lex_less(const Point& a, const Point& b) noexcept
{
    return a < b;
}

Environment::Environment(EnvironmentSpec spec)
    : spec_(std::move(spec)), mean_(spec_.profile), bound_(0.0)
{
    const double C1 = spec_.marginal.upper_bound();
    switch (spec_.kind) {
    case EnvironmentKind::constant:
        bound_ = spec_.profile.upper_bound();
        break;
    case EnvironmentKind::static_iid:
        if (!spec_.profile.is_constant()) {
            throw ConfigError("static_iid environment needs a constant mean profile");
        }
        bound_ = spec_.profile.limit() * C1;
        break;
    case EnvironmentKind::piecewise_linear:
    case EnvironmentKind::trigonometric:
        if (!spec_.profile.is_constant() || spec_.profile.limit() != 1.0) {
            throw ConfigError(to_string(spec_.kind) + " environment needs the mean profile constant(1), got " +
                              spec_.profile.describe());
        }
        bound_ = C1;
        break;
    case EnvironmentKind::modulated_static:
        bound_ = spec_.profile.upper_bound() * C1;
        break;
    }
}

double Environment::lipschitz() const noexcept
{
    const double C1 = spec_.marginal.upper_bound();
    double base = 0.0;
    switch (spec_.kind) {
    case EnvironmentKind::constant:
        base = std::abs(spec_.profile.amplitude()) * spec_.profile.rate();
        break;
    case EnvironmentKind::static_iid:
        base = 0.0;
        break;
    case EnvironmentKind::piecewise_linear:
        base = 2.0 * C1;
        break;
    case EnvironmentKind::trigonometric:
        base = M_PI * C1;
        break;
    case EnvironmentKind::modulated_static:
        base = std::abs(spec_.profile.amplitude()) * spec_.profile.rate() * C1;
        break;
    }
    if (!clock_) {
        return base;
    }
    // d/dt [w(s)/K(s)] with ds/dt = 1/K(s)
    const double K1 = clock_->lower_bound();
    const double dK = std::abs(clock_->amplitude()) * clock_->rate();
    const double w_max = spec_.kind == EnvironmentKind::constant ? clock_->upper_bound() : bound_ * K1;
    return (base / K1 + w_max * dK / (K1 * K1)) / K1;
}

bool Environment::deterministic() const noexcept
{
    return spec_.kind == EnvironmentKind::constant;
}

bool Environment::time_invariant() const noexcept
{
    switch (spec_.kind) {
    case EnvironmentKind::constant:
        return spec_.profile.is_constant() || clock_ != nullptr;
    case EnvironmentKind::static_iid:
        return true;
    case EnvironmentKind::modulated_static:
        return spec_.profile.is_constant() || clock_ != nullptr;
    default:
        return false;
    }
}

double Environment::base_time(double t) const
{
    return clock_ ? clock_->inverse_integral(t) : t;
}

EnvironmentSlice Environment::slice(double t) const
{
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("environment time must be finite and >= 0");
    }
    const double s = base_time(t);
    EnvironmentSlice out;
    switch (spec_.kind) {
    case EnvironmentKind::constant:
        out.coeff = {spec_.profile(s), 0.0};
        out.source = {RandomSource{-1, 1}, RandomSource{-1, 1}};
        break;
    case EnvironmentKind::static_iid:
        out.coeff = {spec_.profile.limit(), 0.0};
        out.source = {RandomSource{0, 1}, RandomSource{-1, 1}};
        break;
    case EnvironmentKind::piecewise_linear:
    case EnvironmentKind::trigonometric: {
        const double n = std::floor(s);
        const double frac = s - n;
        const auto block = static_cast<std::int64_t>(n) + 1;
        const bool linear = spec_.kind == EnvironmentKind::piecewise_linear;
        if (frac <= 0.5) {
            const double a = linear ? 1.0 - 2.0 * frac : std::pow(std::cos(M_PI * frac), 2);
            const double b = linear ? 2.0 * frac : std::pow(std::sin(M_PI * frac), 2);
            out.coeff = {a, b};
            out.source = {RandomSource{block, 1}, RandomSource{block, 2}};
        } else {
            const double r = 1.0 - frac;
            const double a = linear ? 2.0 * r : std::pow(std::sin(M_PI * r), 2);
            const double b = linear ? 1.0 - 2.0 * r : std::pow(std::cos(M_PI * r), 2);
            out.coeff = {a, b};
            out.source = {RandomSource{block, 2}, RandomSource{block + 1, 1}};
        }
        break;
    }
    case EnvironmentKind::modulated_static: {
        const double half = 0.5 * spec_.profile(s);
        out.coeff = {half, half};
        out.source = {RandomSource{0, 1}, RandomSource{0, 2}};
        break;
    }
    }
    if (clock_) {
        const double K = clock_->operator()(s);
        out.coeff[0] /= K;
        out.coeff[1] /= K;
    }
    return out;
}

double Environment::draw(const RandomSource& source, const Point& a, const Point& b) const
{
    if (source.deterministic()) {
        return 1.0;
    }
    const std::uint64_t pa = pack(a);
    const std::uint64_t pb = pack(b);
    const std::uint64_t key = mix64(spec_.seed ^ mix64(static_cast<std::uint64_t>(source.block) + 0x5851F42D4C957F2Dull));
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(pa), static_cast<std::uint32_t>(pa >> 32),
                                  static_cast<std::uint32_t>(pb), static_cast<std::uint32_t>(pb >> 32)};
    const auto out = Philox4x32::apply(ctr, {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)});
    const std::uint64_t bits = source.slot == 1 ? (std::uint64_t{out[1]} << 32 | out[0])
                                                : (std::uint64_t{out[3]} << 32 | out[2]);
    return spec_.marginal.quantile(to_unit(bits));
}

double Environment::w(double t, const Point& x, const Point& y) const
{
    if (x == y) {
        if (!(t >= 0.0)) {
            throw std::invalid_argument("environment time must be >= 0");
        }
        return 0.0;
    }
    const bool ordered = lex_less(x, y);
    const Point& a = ordered ? x : y;
    const Point& b = ordered ? y : x;
    const EnvironmentSlice sl = slice(t);
    double value = 0.0;
    for (int i = 0; i < 2; ++i) {
        if (sl.coeff[i] != 0.0) {
            value += sl.coeff[i] * draw(sl.source[i], a, b);
        }
    }
    // convex weights need not sum to one in floating point; keep the almost sure bound exact
    return std::min(value, bound_);
}

double Environment::centered(double t, const Point& x, const Point& y) const
{
    return w(t, x, y) - mean_(t);
}

Environment Environment::time_change() const
{
    if (clock_) {
        throw std::logic_error("environment is already time-changed");
    }
    Environment out = *this;
    out.clock_ = std::make_shared<const MeanProfile>(spec_.profile);
    out.mean_ = MeanProfile::constant(1.0);
    out.bound_ = bound_ / spec_.profile.lower_bound();
    if (spec_.kind == EnvironmentKind::constant) {
        out.bound_ = 1.0;
    }
    return out;
}

} // namespace rcm
