#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rcm {

/// Adaptive Gauss-Kronrod on [a, b] (b may be +infinity).
double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-10);

/// Composite Gauss-Legendre rule: nodes and weights for `panels` equal
/// panels of [a, b] with `order` points each (order in {2, 3, 5}).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
QuadratureRule gauss_legendre(double a, double b, int panels, int order = 3);

/// Appends a composite rule over each consecutive pair of `breaks`.
QuadratureRule gauss_legendre_breaks(std::span<const double> breaks, int order = 3);

/// Ordinary least squares y = slope x + intercept.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
};
LineFit least_squares(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> values);

/// Euclidean norm of the first d entries.
double norm(const double* v, int d) noexcept;

} // namespace rcm
