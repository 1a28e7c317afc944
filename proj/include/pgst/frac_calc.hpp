#ifndef PGST_FRAC_CALC_HPP
#define PGST_FRAC_CALC_HPP

#include "pgst/grid_function.hpp"
#include "pgst/piecewise_poly.hpp"

namespace pgst {

// Intrinsic-norm report for the temporal order-1/2 spaces.
// total_h12_sq   = l2_sq + gagliardo_sq
// total_h1200_sq = total_h12_sq + weight_sq
struct FracNormReport {
    double l2_sq = 0.0;
    double gagliardo_sq = 0.0;
    double weight_sq = 0.0;
    double total_h12_sq = 0.0;
    double total_h1200_sq = 0.0;
    bool diverged = false;
};

struct FracEvalInfo {
    bool at_breakpoint = false;
};

// Riemann-Liouville fractional integrals, exact per-piece integration of the
// weakly singular kernel against the polynomial pieces.
double frac_integral_plus(const PiecewisePoly& phi, double alpha, double t);
double frac_integral_minus(const PiecewisePoly& phi, double alpha, double t);

// Order-1/2 derivatives. The trial-side derivative requires w(0) = 0 and is
// evaluated as I^{1/2}_+ applied to the a.e. derivative of w (the two agree
// for continuous w vanishing at 0); similarly D^{1/2}_- v = -I^{1/2}_- v'.
double frac_deriv_plus(const PiecewisePoly& w, double t, FracEvalInfo* info = nullptr);
double frac_deriv_minus(const PiecewisePoly& v, double t, FracEvalInfo* info = nullptr);

// Grid-sampled fallback: piecewise-linear interpolant + closed forms.
double frac_deriv_plus(const GridFunction& w, double t);

// || D^{1/2}_+ w ||^2_{L^2(0,inf)} by adaptive quadrature of the closed form,
// with the algebraic t^{-3/2} tail integrated analytically past the window.
double frac_deriv_plus_l2_sq(const PiecewisePoly& w, double rel_tol = 1e-8);
double frac_deriv_minus_l2_sq(const PiecewisePoly& v, double rel_tol = 1e-8);

// Extension by zero to [-L, support_right] and restriction to t >= 0.
PiecewisePoly extend_zero(const PiecewisePoly& u, double L);
PiecewisePoly restrict_positive(const PiecewisePoly& u);

// Gagliardo double integrals for continuous piecewise polynomials:
// same-cell and adjacent-cell contributions in (semi-)closed form, separated
// cell pairs by admissibility-refined Gauss quadrature. The singular diagonal
// is never touched by numerical quadrature.
double gagliardo_halfline_sq(const PiecewisePoly& u);  // over (0,inf)^2
double gagliardo_line_sq(const PiecewisePoly& u);      // over R^2

// \int_0^inf u(s)^2 / s ds in closed form; diverges when u(0+) != 0.
double weighted_zero_integral(const PiecewisePoly& u, bool* diverged = nullptr);

FracNormReport norm_h12(const PiecewisePoly& u, bool weighted);
FracNormReport norm_h12(const GridFunction& u, bool weighted);

// Same report with the double integral restricted to (0, horizon)^2; this is
// the finite-window reading of the intrinsic norm (a constant has vanishing
// seminorm here, while on (0,inf)^2 it would not be integrable).
FracNormReport norm_h12_windowed(const PiecewisePoly& u, bool weighted, double horizon);

}  // namespace pgst

#endif
