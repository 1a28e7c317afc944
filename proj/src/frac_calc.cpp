#include "pgst/frac_calc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pgst/quadrature.hpp"

namespace pgst {

namespace {

constexpr double kBinom[4][4] = {
    {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("fractional order alpha must lie in (0,1)");
}

// tolerance used for the continuity / boundary-value preconditions
double value_tol(const PiecewisePoly& p) { return 1e-9 * (1.0 + p.sup_norm()); }

}  // namespace

double frac_integral_plus(const PiecewisePoly& phi, double alpha, double t) {
    check_alpha(alpha);
    if (t < 0.0) throw std::domain_error("frac_integral_plus: t must be >= 0");
    if (phi.empty() || t <= phi.support_left()) return 0.0;
    if (phi.support_left() < -1e-14)
        throw std::domain_error("frac_integral_plus: phi must be supported in [0,inf)");
    const auto& bp = phi.breakpoints();
    const auto& pc = phi.pieces();
    double sum = 0.0;
    for (size_t i = 0; i < pc.size(); ++i) {
        const double a = bp[i], b = bp[i + 1];
        if (a >= t) break;
        const double tau = t - a;                    // upper kernel radius
        const double lo = (t <= b) ? 0.0 : (t - b);  // lower kernel radius
        // p(tau - r) = sum_j q_j r^j
        double q[4] = {0, 0, 0, 0};
        for (int k = 0; k <= 3; ++k) {
            const double ck = pc[i][static_cast<size_t>(k)];
            if (ck == 0.0) continue;
            double tp = 1.0;  // tau^{k-j}, built downward
            for (int j = k; j >= 0; --j) {
                const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
                q[j] += ck * kBinom[k][j] * sgn * tp;
                tp *= tau;
            }
        }
        for (int j = 0; j <= 3; ++j) {
            if (q[j] == 0.0) continue;
            const double e = alpha + j;
            sum += q[j] * (std::pow(tau, e) - std::pow(lo, e)) / e;
        }
    }
    return sum / std::tgamma(alpha);
}

double frac_integral_minus(const PiecewisePoly& phi, double alpha, double t) {
    check_alpha(alpha);
    if (phi.empty() || t >= phi.support_right()) return 0.0;
    const auto& bp = phi.breakpoints();
    const auto& pc = phi.pieces();
    double sum = 0.0;
    for (size_t i = 0; i < pc.size(); ++i) {
        const double a = bp[i], b = bp[i + 1];
        if (b <= t) continue;
        const double xi = t - a;                     // offset of t in local coords
        const double lo = std::max(a, t) - t;        // kernel radius at near edge
        const double hi = b - t;
        // p(xi + r) = sum_j q_j r^j
        double q[4] = {0, 0, 0, 0};
        for (int k = 0; k <= 3; ++k) {
            const double ck = pc[i][static_cast<size_t>(k)];
            if (ck == 0.0) continue;
            double xp = 1.0;  // xi^{k-j}, built downward
            for (int j = k; j >= 0; --j) {
                q[j] += ck * kBinom[k][j] * xp;
                xp *= xi;
            }
        }
        for (int j = 0; j <= 3; ++j) {
            if (q[j] == 0.0) continue;
            const double e = alpha + j;
            sum += q[j] * (std::pow(hi, e) - std::pow(lo, e)) / e;
        }
    }
    return sum / std::tgamma(alpha);
}

namespace {

bool is_breakpoint(const PiecewisePoly& p, double t) {
    for (double x : p.breakpoints())
        if (x == t) return true;
    return false;
}

}  // namespace

double frac_deriv_plus(const PiecewisePoly& w, double t, FracEvalInfo* info) {
    if (w.empty()) return 0.0;
    if (!(t > 0.0)) throw std::domain_error("frac_deriv_plus: t must be > 0");
    if (w.support_left() < -1e-14)
        throw std::domain_error("frac_deriv_plus: w must be supported in [0,inf)");
    const double tol = value_tol(w);
    // w must extend continuously by zero at the left end of its support
    if (std::abs(w(w.support_left())) > tol)
        throw std::domain_error("frac_deriv_plus: w(0) != 0");
    if (w.max_jump() > tol)
        throw std::domain_error("frac_deriv_plus: w has a jump discontinuity");
    if (info) info->at_breakpoint = is_breakpoint(w, t);
    return frac_integral_plus(w.derivative(), 0.5, t);
}

double frac_deriv_minus(const PiecewisePoly& v, double t, FracEvalInfo* info) {
    if (v.empty()) return 0.0;
    const double tol = value_tol(v);
    if (std::abs(v.eval_left(v.support_right())) > tol)
        throw std::domain_error("frac_deriv_minus: v must vanish at its right end");
    if (v.support_left() > 1e-14 && std::abs(v(v.support_left())) > tol)
        throw std::domain_error("frac_deriv_minus: v jumps at the left support edge");
    if (v.max_jump() > tol)
        throw std::domain_error("frac_deriv_minus: v has a jump discontinuity");
    if (info) info->at_breakpoint = is_breakpoint(v, t);
    return -frac_integral_minus(v.derivative(), 0.5, t);
}

double frac_deriv_plus(const GridFunction& w, double t) {
    return frac_deriv_plus(w.to_piecewise_linear(), t);
}

namespace {

double deriv_l2_sq_impl(const PiecewisePoly& f, bool plus, double rel_tol) {
    // f = w' already; integrates (I^{1/2}_{+/-} f)^2 over (0,inf)
    const double A = f.support_left();
    const double R = f.support_right();
    const double scale = 1.0 + std::abs(f.inner_product(f));
    const double tol = rel_tol * scale;
    auto ival = [&](double t) {
        const double v =
            plus ? frac_integral_plus(f, 0.5, t) : frac_integral_minus(f, 0.5, t);
        return v * v;
    };
    double total = adaptive_integrate_breakpoints(ival, f.breakpoints(), 0.25 * tol);
    if (plus) {
        // nonzero \int f means w jumps at its right end; t^{-1} tail, divergent
        if (std::abs(f.integral()) > 1e-9 * scale)
            return std::numeric_limits<double>::infinity();
        // past the support: (D^{1/2}_+ w)(t) ~ (\int s f) / (2 sqrt(pi) t^{3/2})
        const double c1 = std::abs(f.moment(1)) / (2.0 * std::sqrt(std::numbers::pi));
        double t0 = R;
        double t1 = std::max(4.0 * std::max(R, 1.0), 2.0 * R);
        for (int it = 0; it < 60; ++it) {
            total += adaptive_integrate(ival, t0, t1, 0.1 * tol);
            const double tail_bound = c1 * c1 / (t1 * t1);  // 2x safety
            if (tail_bound < 0.25 * tol) {
                total += c1 * c1 / (2.0 * t1 * t1);
                break;
            }
            t0 = t1;
            t1 *= 2.0;
        }
    } else if (A > 0.0) {
        // left tail of I^{1/2}_- f on (0, A); bounded domain on the half line
        total += adaptive_integrate(ival, 0.0, A, 0.25 * tol);
    }
    return total;
}

}  // namespace

double frac_deriv_plus_l2_sq(const PiecewisePoly& w, double rel_tol) {
    const double tol = value_tol(w);
    if (std::abs(w(w.support_left())) > tol || w.max_jump() > tol)
        throw std::domain_error("frac_deriv_plus_l2_sq: w not admissible");
    return deriv_l2_sq_impl(w.derivative(), true, rel_tol);
}

double frac_deriv_minus_l2_sq(const PiecewisePoly& v, double rel_tol) {
    const double tol = value_tol(v);
    if (std::abs(v.eval_left(v.support_right())) > tol || v.max_jump() > tol)
        throw std::domain_error("frac_deriv_minus_l2_sq: v not admissible");
    return deriv_l2_sq_impl(v.derivative(), false, rel_tol);
}

PiecewisePoly extend_zero(const PiecewisePoly& u, double L) {
    if (u.empty()) return PiecewisePoly::constant(0.0, -L, L);
    if (u.support_left() < -1e-14)
        throw std::domain_error("extend_zero: u must be supported in [0,L]");
    std::vector<double> bp = u.breakpoints();
    std::vector<PiecewisePoly::Coeffs> pc = u.pieces();
    if (bp.front() > 0.0) {
        bp.insert(bp.begin(), 0.0);
        pc.insert(pc.begin(), PiecewisePoly::Coeffs{0, 0, 0, 0});
    }
    bp.insert(bp.begin(), -L);
    pc.insert(pc.begin(), PiecewisePoly::Coeffs{0, 0, 0, 0});
    return PiecewisePoly(std::move(bp), std::move(pc));
}

PiecewisePoly restrict_positive(const PiecewisePoly& u) {
    PiecewisePoly r = u.clipped(0.0, std::numeric_limits<double>::infinity());
    r.trim(0.0);
    return r;
}

// ---------------------------------------------------------------------------
// Gagliardo double integrals
// ---------------------------------------------------------------------------

namespace {

struct LinCell {
    double x0, x1;  // cell
    double u0, u1;  // endpoint values of the (linear) restriction
    double width() const { return x1 - x0; }
    double slope() const { return (u1 - u0) / (x1 - x0); }
    bool zero() const { return u0 == 0.0 && u1 == 0.0; }
};

// exact: both points in the same cell
double same_cell(const LinCell& c) {
    const double b = c.slope();
    return b * b * c.width() * c.width();
}

// cells sharing one endpoint; u continuous there.
// t = x* - q in the left cell, s = x* + p in the right cell.
double adjacent_cells(const LinCell& left, const LinCell& right) {
    const double a = right.slope();
    const double b = left.slope();
    if (a == 0.0 && b == 0.0) return 0.0;
    const double H = right.width();
    const double K = left.width();
    auto g = [&](double p) {
        const double core = (p > 0.0) ? 2.0 * b * (a - b) * p * std::log((p + K) / p) : 0.0;
        return b * b * K + core + (a - b) * (a - b) * p * K / (p + K);
    };
    const double scale = (a * a + b * b) * std::max(H, K) * std::max(H, K);
    return adaptive_integrate(g, 0.0, H, 1e-13 * (1.0 + scale));
}

double separated_cells(const LinCell& c1, const LinCell& c2);

double separated_quad(const LinCell& c1, const LinCell& c2) {
    const GaussRule& r = gauss_rule(12);
    const double m1 = 0.5 * (c1.x0 + c1.x1), h1 = 0.5 * c1.width();
    const double m2 = 0.5 * (c2.x0 + c2.x1), h2 = 0.5 * c2.width();
    double sum = 0.0;
    for (size_t i = 0; i < r.nodes.size(); ++i) {
        const double t = m1 + h1 * r.nodes[i];
        const double ut = c1.u0 + c1.slope() * (t - c1.x0);
        double inner = 0.0;
        for (size_t j = 0; j < r.nodes.size(); ++j) {
            const double s = m2 + h2 * r.nodes[j];
            const double us = c2.u0 + c2.slope() * (s - c2.x0);
            const double d = (us - ut) / (s - t);
            inner += r.weights[j] * d * d;
        }
        sum += r.weights[i] * inner;
    }
    return sum * h1 * h2;
}

double separated_cells(const LinCell& c1, const LinCell& c2) {
    if (c1.zero() && c2.zero()) return 0.0;
    const double gap = (c1.x1 <= c2.x0) ? (c2.x0 - c1.x1) : (c1.x0 - c2.x1);
    const double wmax = std::max(c1.width(), c2.width());
    if (gap >= wmax) return separated_quad(c1, c2);
    // split the wider cell and recurse
    const LinCell& wide = (c1.width() >= c2.width()) ? c1 : c2;
    const LinCell& thin = (c1.width() >= c2.width()) ? c2 : c1;
    const double xm = 0.5 * (wide.x0 + wide.x1);
    const double um = wide.u0 + wide.slope() * (xm - wide.x0);
    const LinCell a{wide.x0, xm, wide.u0, um};
    const LinCell b{xm, wide.x1, um, wide.u1};
    return separated_cells(a, thin) + separated_cells(b, thin);
}

std::vector<LinCell> to_cells(const PiecewisePoly& u, double lo, double hi) {
    // chord-subdivide pieces of degree >= 2; exact for piecewise linear input
    std::vector<LinCell> cells;
    const auto& bp = u.breakpoints();
    const auto& pc = u.pieces();
    if (!u.empty() && lo < u.support_left())
        cells.push_back(LinCell{lo, u.support_left(), 0.0, 0.0});
    for (size_t i = 0; i < pc.size(); ++i) {
        const double a = std::max(bp[i], lo), b = std::min(bp[i + 1], hi);
        if (!(a < b)) continue;
        const bool curved = pc[i][2] != 0.0 || pc[i][3] != 0.0;
        const int sub = curved ? 8 : 1;
        for (int s = 0; s < sub; ++s) {
            const double x0 = a + (b - a) * s / sub;
            const double x1 = a + (b - a) * (s + 1) / sub;
            cells.push_back(LinCell{x0, x1, u(x0), u(x1)});
        }
    }
    if (!u.empty() && u.support_right() < hi)
        cells.push_back(LinCell{u.support_right(), hi, 0.0, 0.0});
    if (cells.empty()) cells.push_back(LinCell{lo, hi, 0.0, 0.0});
    return cells;
}

double gagliardo_cells_sq(const std::vector<LinCell>& cells) {
    double total = 0.0;
    for (size_t i = 0; i < cells.size(); ++i) {
        total += same_cell(cells[i]);
        for (size_t j = i + 1; j < cells.size(); ++j) {
            double contrib;
            if (cells[j].x0 == cells[i].x1)
                contrib = adjacent_cells(cells[i], cells[j]);
            else
                contrib = separated_cells(cells[i], cells[j]);
            total += 2.0 * contrib;  // symmetry in (s,t)
        }
    }
    return total;
}

// \int u(t)^2 / |t - c| dt over the support, assuming u(c) = 0 when c touches it
double edge_tail_integral(const PiecewisePoly& u, double c) {
    auto f = [&](double t) {
        const double v = u(t);
        return v * v / std::abs(t - c);
    };
    const double scale = 1.0 + u.l2_norm_sq();
    return adaptive_integrate_breakpoints(f, u.breakpoints(), 1e-12 * scale);
}

double continuity_defect(const PiecewisePoly& u, bool include_left_edge,
                         bool include_right_edge) {
    double d = u.max_jump();
    if (!u.empty()) {
        if (include_left_edge) d = std::max(d, std::abs(u(u.support_left())));
        if (include_right_edge) d = std::max(d, std::abs(u.eval_left(u.support_right())));
    }
    return d;
}

}  // namespace

double gagliardo_halfline_sq(const PiecewisePoly& u) {
    if (u.empty()) return 0.0;
    if (u.support_left() < -1e-14)
        throw std::domain_error("gagliardo_halfline_sq: u must be supported in [0,inf)");
    const double tol = value_tol(u);
    // interior jumps (and a nonzero right edge value) make the integral diverge
    if (continuity_defect(u, u.support_left() > 0.0, true) > tol)
        return std::numeric_limits<double>::infinity();
    const double R = u.support_right();
    const auto cells = to_cells(u, 0.0, R);
    double total = gagliardo_cells_sq(cells);
    total += 2.0 * edge_tail_integral(u, R);  // s > R, t < R
    return total;
}

double gagliardo_line_sq(const PiecewisePoly& u) {
    if (u.empty()) return 0.0;
    const double tol = value_tol(u);
    if (continuity_defect(u, true, true) > tol)
        return std::numeric_limits<double>::infinity();
    const double A = u.support_left(), R = u.support_right();
    const auto cells = to_cells(u, A, R);
    double total = gagliardo_cells_sq(cells);
    total += 2.0 * edge_tail_integral(u, R);
    total += 2.0 * edge_tail_integral(u, A);
    return total;
}

// windowed variant: double integral over (0, horizon)^2 only
static double gagliardo_window_sq(const PiecewisePoly& u, double horizon) {
    const PiecewisePoly cu = u.clipped(0.0, horizon);
    if (cu.empty()) return 0.0;
    const double tol = value_tol(cu);
    const bool interior_left_edge = cu.support_left() > 0.0;
    if (cu.max_jump() > tol ||
        (interior_left_edge && std::abs(cu(cu.support_left())) > tol) ||
        (cu.support_right() < horizon && std::abs(cu.eval_left(cu.support_right())) > tol))
        return std::numeric_limits<double>::infinity();
    return gagliardo_cells_sq(to_cells(cu, 0.0, horizon));
}

double weighted_zero_integral(const PiecewisePoly& u, bool* diverged) {
    if (diverged) *diverged = false;
    if (u.empty()) return 0.0;
    if (u.support_left() < -1e-14)
        throw std::domain_error("weighted_zero_integral: u must live on [0,inf)");
    if (u.support_left() == 0.0 && std::abs(u(0.0)) > value_tol(u)) {
        if (diverged) *diverged = true;
        return std::numeric_limits<double>::infinity();
    }
    auto f = [&](double t) {
        const double v = u(t);
        return v * v / t;
    };
    const double scale = 1.0 + u.l2_norm_sq();
    return adaptive_integrate_breakpoints(f, u.breakpoints(), 1e-12 * scale);
}

FracNormReport norm_h12(const PiecewisePoly& u, bool weighted) {
    FracNormReport r;
    r.l2_sq = u.l2_norm_sq();
    r.gagliardo_sq = gagliardo_halfline_sq(u);
    if (weighted) {
        bool div = false;
        r.weight_sq = weighted_zero_integral(u, &div);
        if (div) r.diverged = true;
    }
    if (!std::isfinite(r.gagliardo_sq)) r.diverged = true;
    r.total_h12_sq = r.l2_sq + r.gagliardo_sq;
    r.total_h1200_sq = r.total_h12_sq + r.weight_sq;
    return r;
}

FracNormReport norm_h12_windowed(const PiecewisePoly& u, bool weighted, double horizon) {
    FracNormReport r;
    r.l2_sq = u.clipped(0.0, horizon).l2_norm_sq();
    r.gagliardo_sq = gagliardo_window_sq(u, horizon);
    if (weighted) {
        bool div = false;
        r.weight_sq = weighted_zero_integral(u.clipped(0.0, horizon), &div);
        if (div) r.diverged = true;
    }
    if (!std::isfinite(r.gagliardo_sq)) r.diverged = true;
    r.total_h12_sq = r.l2_sq + r.gagliardo_sq;
    r.total_h1200_sq = r.total_h12_sq + r.weight_sq;
    return r;
}

FracNormReport norm_h12(const GridFunction& u, bool weighted) {
    return norm_h12(u.to_piecewise_linear(), weighted);
}

}  // namespace pgst
