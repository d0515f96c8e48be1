#include "rcm/numerics.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcm {

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol)
{
    using boost::math::quadrature::gauss_kronrod;
    double error = 0.0;
    return gauss_kronrod<double, 61>::integrate(f, a, b, 15, rel_tol, &error);
}

namespace {

template <int N>
void append_panel(QuadratureRule& rule, double a, double b)
{
    using Rule = boost::math::quadrature::gauss<double, N>;
    const auto& abscissa = Rule::abscissa();
    const auto& weight = Rule::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    // boost stores the non-negative half of a symmetric rule
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
        const double x = abscissa[i];
        const double w = weight[i];
        if (x == 0.0) {
            rule.nodes.push_back(mid);
            rule.weights.push_back(half * w);
        } else {
            rule.nodes.push_back(mid - half * x);
            rule.weights.push_back(half * w);
            rule.nodes.push_back(mid + half * x);
            rule.weights.push_back(half * w);
        }
    }
}

void append(QuadratureRule& rule, double a, double b, int order)
{
    switch (order) {
    case 2:
        append_panel<2>(rule, a, b);
        break;
    case 3:
        append_panel<3>(rule, a, b);
        break;
    case 5:
        append_panel<5>(rule, a, b);
        break;
    default:
        throw std::invalid_argument("gauss_legendre order must be 2, 3 or 5");
    }
}

} // namespace

QuadratureRule gauss_legendre(double a, double b, int panels, int order)
{
    if (panels < 1 || !(b > a)) {
        throw std::invalid_argument("gauss_legendre needs a < b and at least one panel");
    }
    QuadratureRule rule;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        append(rule, a + p * h, p + 1 == panels ? b : a + (p + 1) * h, order);
    }
    return rule;
}

QuadratureRule gauss_legendre_breaks(std::span<const double> breaks, int order)
{
    QuadratureRule rule;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (breaks[i + 1] > breaks[i]) {
            append(rule, breaks[i], breaks[i + 1], order);
        }
    }
    return rule;
}

LineFit least_squares(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("least_squares needs two or more paired points");
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("least_squares needs distinct abscissae");
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / n);
    return fit;
}

double median(std::vector<double> values)
{
    if (values.empty()) {
        throw std::invalid_argument("median of an empty sample");
    }
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double norm(const double* v, int d) noexcept
{
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
        s += v[c] * v[c];
    }
    return std::sqrt(s);
}

} // namespace rcm
