#pragma once

#include "rcm/lattice.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>

namespace rcm {

/// Mean-one bounded law of the i.i.d. variables behind every random environment.
class MarginalLaw {
public:
    enum class Kind { uniform02, bernoulli, two_point };

    static MarginalLaw uniform02();
    /// 0 with probability q, 1/(1-q) otherwise; q in [0,1).
    static MarginalLaw bernoulli(double q);
    /// lo with probability (hi-1)/(hi-lo), hi otherwise; 0 <= lo < 1 < hi.
    static MarginalLaw two_point(double lo, double hi);

    Kind kind() const noexcept { return kind_; }
    double q() const noexcept { return q_; }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }

    double upper_bound() const noexcept;
    double mean() const noexcept;
    double variance() const noexcept;
    /// Inverse-CDF draw from a uniform u in [0,1).
    double quantile(double u) const noexcept;

    std::string describe() const;

private:
    MarginalLaw(Kind kind, double q, double lo, double hi) : kind_(kind), q_(q), lo_(lo), hi_(hi) {}
    Kind kind_;
    double q_;
    double lo_;
    double hi_;
};

/// t -> K(t): either a constant K or K + A (1+t)^{-rho} with rho > 1/2.
class MeanProfile {
public:
    enum class Kind { constant, decaying };

    static MeanProfile constant(double K);
    static MeanProfile decaying(double K, double A, double rho);

    Kind kind() const noexcept { return kind_; }
    /// The long-time limit K.
    double limit() const noexcept { return K_; }
    double amplitude() const noexcept { return A_; }
    double rate() const noexcept { return rho_; }
    bool is_constant() const noexcept { return kind_ == Kind::constant || A_ == 0.0; }

    double operator()(double t) const noexcept;
    double derivative(double t) const noexcept;
    /// K1 <= K(t) <= K2 for all t >= 0.
    double lower_bound() const noexcept;
    double upper_bound() const noexcept;

    /// a(t) = int_0^t K(s) ds.
    double integral(double t) const noexcept;
    /// a^{-1}(s) by bracketed bisection; |a(a^{-1}(s)) - s| <= 1e-12 max(1, s).
    double inverse_integral(double s) const;

    std::string describe() const;

private:
    MeanProfile(Kind kind, double K, double A, double rho) : kind_(kind), K_(K), A_(A), rho_(rho) {}
    Kind kind_;
    double K_;
    double A_;
    double rho_;
};

/// (1/t) int_0^t |K(s) - K|^2 ds.
double pi_term(const MeanProfile& profile, double t);

enum class EnvironmentKind { constant, static_iid, piecewise_linear, trigonometric, modulated_static };

std::string to_string(EnvironmentKind kind);
EnvironmentKind environment_kind_from_string(const std::string& name);

struct EnvironmentSpec {
    EnvironmentKind kind = EnvironmentKind::constant;
    MarginalLaw marginal = MarginalLaw::uniform02();
    MeanProfile profile = MeanProfile::constant(1.0);
    std::uint64_t seed = 0;
};

/// One family of i.i.d. variables Z^{(slot)}_{(block)} indexed by pairs.
/// block < 0 denotes the deterministic value 1.
struct RandomSource {
    std::int64_t block = -1;
    int slot = 1;

    bool deterministic() const noexcept { return block < 0; }
    friend bool operator==(const RandomSource&, const RandomSource&) = default;
};

/// At a fixed time, w(x,y) = coeff[0] Z_{source[0]}(x,y) + coeff[1] Z_{source[1]}(x,y).
struct EnvironmentSlice {
    std::array<double, 2> coeff{0.0, 0.0};
    std::array<RandomSource, 2> source{};
};

/// A storage-free conductance field w(t,x,y) on Z^d x Z^d.
///
/// Values are a pure function of (spec, t, canonical pair); the pair is put
/// in lexicographic order before hashing, so w(t,x,y) == w(t,y,x) bit for bit.
class Environment {
public:
    explicit Environment(EnvironmentSpec spec);

    const EnvironmentSpec& spec() const noexcept { return spec_; }
    EnvironmentKind kind() const noexcept { return spec_.kind; }

    /// Mean profile of this (possibly time-changed) environment.
    const MeanProfile& mean_profile() const noexcept { return mean_; }
    /// Almost sure bound 0 <= w <= C1.
    double upper_bound() const noexcept { return bound_; }
    /// |w(t) - w(s)| <= lipschitz() |t - s| for every pair.
    double lipschitz() const noexcept;

    bool deterministic() const noexcept;
    bool time_invariant() const noexcept;
    bool time_changed() const noexcept { return clock_ != nullptr; }

    EnvironmentSlice slice(double t) const;

    /// Z_{source}(a, b) for an already canonical pair (a < b lexicographically).
    double draw(const RandomSource& source, const Point& a, const Point& b) const;

    /// w(t,x,y) in unscaled lattice coordinates; 0 on the diagonal.
    double w(double t, const Point& x, const Point& y) const;
    /// xi = w - K(t).
    double centered(double t, const Point& x, const Point& y) const;

    /// w~(t) = w(a^{-1}(t)) / K(a^{-1}(t)); mean one, bound C1/K1.
    Environment time_change() const;

    /// Base-clock time of a time-changed environment (identity otherwise).
    double base_time(double t) const;

private:
    EnvironmentSpec spec_;
    MeanProfile mean_;
    double bound_;
    std::shared_ptr<const MeanProfile> clock_;
};

/// Lexicographic order used for canonical pairs.
bool lex_less(const Point& a, const Point& b) noexcept;

} // namespace rcm
