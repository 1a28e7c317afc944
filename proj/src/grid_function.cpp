#include "pgst/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pgst {

GridFunction::GridFunction(double lo_, double hi_, std::vector<double> v)
    : lo(lo_), hi(hi_), values(std::move(v)) {
    if (values.size() < 2 || !(hi > lo))
        throw std::invalid_argument("GridFunction: need n >= 2 and hi > lo");
}

GridFunction GridFunction::sample(const std::function<double(double)>& f, double lo,
                                  double hi, size_t n) {
    std::vector<double> v(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (size_t i = 0; i < n; ++i) v[i] = f(lo + static_cast<double>(i) * h);
    return GridFunction(lo, hi, std::move(v));
}

GridFunction GridFunction::sample(const PiecewisePoly& p, double lo, double hi,
                                  size_t n) {
    return sample([&p](double t) { return p(t); }, lo, hi, n);
}

double GridFunction::operator()(double t) const {
    if (t <= lo || t >= hi) {
        if (t == lo) return values.front();
        if (t == hi) return values.back();
        return 0.0;
    }
    const double h = step();
    const double x = (t - lo) / h;
    const size_t i = std::min(values.size() - 2, static_cast<size_t>(x));
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
}

PiecewisePoly GridFunction::to_piecewise_linear() const {
    std::vector<double> nodes(values.size());
    for (size_t i = 0; i < values.size(); ++i) nodes[i] = node(i);
    return PiecewisePoly::linear_interpolant(nodes, values);
}

double GridFunction::l2_norm_sq() const {
    const double h = step();
    double s = 0.5 * (values.front() * values.front() + values.back() * values.back());
    for (size_t i = 1; i + 1 < values.size(); ++i) s += values[i] * values[i];
    return s * h;
}

double GridFunction::inner_product(const GridFunction& g) const {
    if (g.values.size() != values.size() || g.lo != lo || g.hi != hi)
        throw std::invalid_argument("GridFunction::inner_product: grid mismatch");
    const double h = step();
    double s = 0.5 * (values.front() * g.values.front() + values.back() * g.values.back());
    for (size_t i = 1; i + 1 < values.size(); ++i) s += values[i] * g.values[i];
    return s * h;
}

double GridFunction::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double GridFunction::boundary_residual() const {
    const double m = max_abs();
    if (m == 0.0) return 0.0;
    const size_t k = std::max<size_t>(1, values.size() / 64);
    double edge = 0.0;
    for (size_t i = 0; i < k; ++i) {
        edge = std::max(edge, std::abs(values[i]));
        edge = std::max(edge, std::abs(values[values.size() - 1 - i]));
    }
    return edge / m;
}

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft_radix2: size must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) *
                           (inverse ? 1.0 : -1.0);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

namespace {

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// apply a Fourier multiplier m(xi) on the 4x zero-padded window
GridFunction apply_multiplier(
    const GridFunction& u,
    const std::function<std::complex<double>(double)>& mult) {
    const size_t n = u.size();
    const size_t m = next_pow2(4 * n);
    std::vector<std::complex<double>> a(m, 0.0);
    // center the window in the padded buffer to keep wrap-around far away
    const size_t off = (m - n) / 2;
    for (size_t i = 0; i < n; ++i) a[off + i] = u.values[i];
    fft_radix2(a, false);
    const double h = u.step();
    const double dxi = 2.0 * std::numbers::pi / (static_cast<double>(m) * h);
    for (size_t k = 0; k < m; ++k) {
        const double kk = (k <= m / 2) ? static_cast<double>(k)
                                       : static_cast<double>(k) - static_cast<double>(m);
        a[k] *= mult(kk * dxi);
    }
    fft_radix2(a, true);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = a[off + i].real();
    return GridFunction(u.lo, u.hi, std::move(out));
}

}  // namespace

GridFunction hilbert_transform(const GridFunction& u, HilbertInfo* info) {
    if (info) {
        info->boundary_residual = u.boundary_residual();
        info->truncation_warning = info->boundary_residual > 1e-8;
    }
    return apply_multiplier(u, [](double xi) -> std::complex<double> {
        if (xi > 0.0) return {0.0, -1.0};
        if (xi < 0.0) return {0.0, 1.0};
        return {0.0, 0.0};
    });
}

GridFunction hilbert_alpha(const GridFunction& u, double alpha, HilbertInfo* info) {
    const double c = std::cos(std::numbers::pi * alpha);
    const double s = std::sin(std::numbers::pi * alpha);
    GridFunction hu = hilbert_transform(u, info);
    std::vector<double> out(u.size());
    for (size_t i = 0; i < u.size(); ++i) out[i] = c * u.values[i] + s * hu.values[i];
    return GridFunction(u.lo, u.hi, std::move(out));
}

namespace {

// principal branch of (i*xi)^{1/2}: |xi|^{1/2} e^{i sgn(xi) pi/4}
std::complex<double> symbol_plus(double xi) {
    const double r = std::sqrt(std::abs(xi));
    const double c = std::numbers::sqrt2 / 2.0;
    if (xi > 0.0) return {r * c, r * c};
    if (xi < 0.0) return {r * c, -r * c};
    return {0.0, 0.0};
}

}  // namespace

GridFunction frac_deriv_plus_fourier(const GridFunction& u) {
    return apply_multiplier(u, [](double xi) { return symbol_plus(xi); });
}

GridFunction frac_deriv_minus_fourier(const GridFunction& u) {
    // (-i xi)^{1/2} = conj((i xi)^{1/2}) for real xi
    return apply_multiplier(u, [](double xi) { return std::conj(symbol_plus(xi)); });
}

}  // namespace pgst
