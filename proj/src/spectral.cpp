#include "rcm/spectral.hpp"

#include "rcm/numerics.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace rcm {

namespace {

std::mutex& planner_lock()
{
    static std::mutex lock;
    return lock;
}

/// 2 int_0^inf (1 - cos u) u^{-1-alpha} du.
double stable_constant_1d(double alpha)
{
    const double p = 1.0 + alpha;
    auto integrand = [p](double u) {
        if (u < 1e-4) {
            // 2 sin^2(u/2) = u^2/2 (1 - u^2/12 + ...); avoids 0 * inf near the origin
            return 0.5 * std::pow(u, 2.0 - p) * (1.0 - u * u / 12.0);
        }
        const double s = std::sin(0.5 * u);
        return 2.0 * s * s * std::pow(u, -p);
    };
    constexpr double period = 2.0 * M_PI;
    boost::math::quadrature::tanh_sinh<double> near_zero;
    double sum = near_zero.integrate(integrand, 0.0, period, 1e-14);
    constexpr int kPeriods = 400;
    for (int j = 1; j < kPeriods; ++j) {
        sum += integrate_adaptive(integrand, j * period, (j + 1) * period, 1e-13);
    }
    // int_A^inf (1 - cos u) u^{-p} du with A a multiple of 2 pi:
    // A^{1-p}/(p-1) - int_A^inf cos u u^{-p} du, and the cosine integral is
    // p A^{-p-1} - p(p+1)(p+2) A^{-p-3} + ...
    const double A = kPeriods * period;
    sum += std::pow(A, 1.0 - p) / (p - 1.0) - p * std::pow(A, -p - 1.0) + p * (p + 1.0) * (p + 2.0) * std::pow(A, -p - 3.0);
    return 2.0 * sum;
}

} // namespace

double stable_constant(int d, double alpha)
{
    if (!(alpha > 0.0 && alpha < 2.0)) {
        throw std::invalid_argument("stable_constant needs alpha in (0,2)");
    }
    if (d < 1 || d > 3) {
        throw std::invalid_argument("stable_constant needs d in {1,2,3}");
    }
    static std::mutex lock;
    static std::map<std::pair<int, double>, double> cache;
    {
        std::lock_guard<std::mutex> guard(lock);
        auto it = cache.find({d, alpha});
        if (it != cache.end()) {
            return it->second;
        }
    }
    const double c1 = stable_constant_1d(alpha);
    double value = c1;
    if (d == 2) {
        // (c1/2) int_0^{2 pi} |cos theta|^alpha d theta
        const double angular = 4.0 * integrate_adaptive([alpha](double th) { return std::pow(std::cos(th), alpha); },
                                                        0.0, M_PI / 2, 1e-13);
        value = 0.5 * c1 * angular;
    } else if (d == 3) {
        // (c1/2) 2 pi int_{-1}^{1} |mu|^alpha d mu
        value = 0.5 * c1 * 2.0 * M_PI * 2.0 / (alpha + 1.0);
    }
    std::lock_guard<std::mutex> guard(lock);
    cache[{d, alpha}] = value;
    return value;
}

std::size_t torus_index(const Lattice& fine, const Lattice& coarse, std::size_t site)
{
    if (fine.dim() != coarse.dim() || fine.scale() % coarse.scale() != 0) {
        throw std::invalid_argument("torus_index: fine scale must be a multiple of the coarse scale");
    }
    const std::int64_t ratio = fine.scale() / coarse.scale();
    Point p = coarse.grid_point(site);
    for (int c = 0; c < coarse.dim(); ++c) {
        p[c] *= ratio;
    }
    return fine.index(fine.wrap(p));
}

struct SpectralTorus::Plans {
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;

    ~Plans()
    {
        std::lock_guard<std::mutex> guard(planner_lock());
        if (fwd) {
            fftw_destroy_plan(fwd);
        }
        if (bwd) {
            fftw_destroy_plan(bwd);
        }
        fftw_free(real);
        fftw_free(spec);
    }
};

SpectralTorus::SpectralTorus(const Lattice& grid) : grid_(grid)
{
    if (grid.side() < 2) {
        throw std::invalid_argument("SpectralTorus needs at least two points per side");
    }
    const auto n = static_cast<std::size_t>(grid.side());
    const int dim = grid.dim();
    const double length = 2.0 * grid.half_width();
    const std::size_t half = n / 2 + 1;
    modes_ = half;
    for (int c = 0; c + 1 < dim; ++c) {
        modes_ *= n;
    }
    norms_.resize(modes_);
    wave_.assign(modes_ * 3, 0.0);
    const double base = 2.0 * M_PI / length;
    for (std::size_t m = 0; m < modes_; ++m) {
        std::size_t rest = m;
        double n2 = 0.0;
        for (int c = dim - 1; c >= 0; --c) {
            const std::size_t extent = (c == dim - 1) ? half : n;
            auto j = static_cast<std::int64_t>(rest % extent);
            rest /= extent;
            if (c != dim - 1 && j > grid.side() / 2) {
                j -= grid.side();
            }
            const double xi = base * static_cast<double>(j);
            wave_[m * 3 + static_cast<std::size_t>(c)] = xi;
            n2 += xi * xi;
        }
        norms_[m] = std::sqrt(n2);
    }
    plans_ = std::make_unique<Plans>();
    std::vector<int> dims(static_cast<std::size_t>(dim), static_cast<int>(n));
    std::lock_guard<std::mutex> guard(planner_lock());
    plans_->real = fftw_alloc_real(grid.size());
    plans_->spec = fftw_alloc_complex(modes_);
    plans_->fwd = fftw_plan_dft_r2c(dim, dims.data(), plans_->real, plans_->spec, FFTW_ESTIMATE);
    plans_->bwd = fftw_plan_dft_c2r(dim, dims.data(), plans_->spec, plans_->real, FFTW_ESTIMATE);
    if (!plans_->fwd || !plans_->bwd) {
        throw std::runtime_error("FFTW plan creation failed");
    }
}

SpectralTorus::~SpectralTorus() = default;
SpectralTorus::SpectralTorus(SpectralTorus&&) noexcept = default;
SpectralTorus& SpectralTorus::operator=(SpectralTorus&&) noexcept = default;

void SpectralTorus::forward(std::span<const double> in, std::span<std::complex<double>> out)
{
    if (in.size() != grid_.size() || out.size() != modes_) {
        throw std::invalid_argument("forward transform: size mismatch");
    }
    std::copy(in.begin(), in.end(), plans_->real);
    fftw_execute(plans_->fwd);
    for (std::size_t m = 0; m < modes_; ++m) {
        out[m] = {plans_->spec[m][0], plans_->spec[m][1]};
    }
}

void SpectralTorus::backward(std::span<const std::complex<double>> in, std::span<double> out)
{
    if (out.size() != grid_.size() || in.size() != modes_) {
        throw std::invalid_argument("backward transform: size mismatch");
    }
    for (std::size_t m = 0; m < modes_; ++m) {
        plans_->spec[m][0] = in[m].real();
        plans_->spec[m][1] = in[m].imag();
    }
    fftw_execute(plans_->bwd);
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = plans_->real[i] * scale;
    }
}

void SpectralTorus::apply_radial(std::span<const double> in, std::span<double> out, const std::function<double(double)>& m)
{
    std::vector<std::complex<double>> spec(modes_);
    forward(in, spec);
    for (std::size_t j = 0; j < modes_; ++j) {
        spec[j] *= m(norms_[j]);
    }
    backward(spec, out);
}

void SpectralTorus::fractional(std::span<const double> in, std::span<double> out, double alpha, double K)
{
    const double c = K * stable_constant(grid_.dim(), alpha);
    apply_radial(in, out, [&](double xi) { return xi == 0.0 ? 0.0 : -c * std::pow(xi, alpha); });
}

void SpectralTorus::derivative(std::span<const double> in, std::span<double> out, int c)
{
    std::vector<std::complex<double>> spec(modes_);
    forward(in, spec);
    const double nyquist = M_PI * static_cast<double>(grid_.side()) / (2.0 * grid_.half_width());
    for (std::size_t j = 0; j < modes_; ++j) {
        const double xi = wavenumber(j, c);
        if (grid_.side() % 2 == 0 && std::abs(std::abs(xi) - nyquist) < 1e-9 * nyquist) {
            spec[j] = 0.0;
        } else {
            spec[j] *= std::complex<double>(0.0, xi);
        }
    }
    backward(spec, out);
}

std::vector<double> apply_bar_continuum(const Lattice& grid, std::span<const double> g, double alpha, double K)
{
    SpectralTorus torus(grid);
    std::vector<double> out(grid.size());
    torus.fractional(g, out, alpha, K);
    return out;
}

} // namespace rcm
