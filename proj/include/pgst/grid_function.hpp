#ifndef PGST_GRID_FUNCTION_HPP
#define PGST_GRID_FUNCTION_HPP

#include <complex>
#include <functional>
#include <vector>

#include "pgst/piecewise_poly.hpp"

namespace pgst {

// Uniformly sampled function on a finite window; numeric carrier for the
// Hilbert transform and for Fourier-side fractional derivatives.
struct GridFunction {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> values;  // samples at lo + i*step(), i = 0..n-1

    GridFunction() = default;
    GridFunction(double lo_, double hi_, std::vector<double> v);

    static GridFunction sample(const std::function<double(double)>& f, double lo,
                               double hi, size_t n);
    static GridFunction sample(const PiecewisePoly& p, double lo, double hi, size_t n);

    size_t size() const { return values.size(); }
    double step() const { return (hi - lo) / static_cast<double>(values.size() - 1); }
    double node(size_t i) const { return lo + static_cast<double>(i) * step(); }
    double operator()(double t) const;  // linear interpolation, 0 outside

    PiecewisePoly to_piecewise_linear() const;

    double l2_norm_sq() const;  // trapezoid
    double inner_product(const GridFunction& g) const;  // same grid required
    double max_abs() const;
    // |values| near the window ends relative to the overall max
    double boundary_residual() const;
};

// In-place iterative radix-2 FFT (size must be a power of two).
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse);

struct HilbertInfo {
    bool truncation_warning = false;
    double boundary_residual = 0.0;
};

// Hilbert transform via the Fourier multiplier -i*sgn(xi) on a zero-padded
// periodic extension (padding factor 4). The sign convention is pinned by the
// identity D^{1/2}_- H = -D^{1/2}_+, which the test suite verifies.
GridFunction hilbert_transform(const GridFunction& u, HilbertInfo* info = nullptr);

// H^alpha = cos(pi*alpha) Id + sin(pi*alpha) H
GridFunction hilbert_alpha(const GridFunction& u, double alpha,
                           HilbertInfo* info = nullptr);

// Fourier-side fractional derivatives on the window (multipliers (i xi)^{1/2}
// and (-i xi)^{1/2}); for functions decaying inside the window.
GridFunction frac_deriv_plus_fourier(const GridFunction& u);
GridFunction frac_deriv_minus_fourier(const GridFunction& u);

}  // namespace pgst

#endif
