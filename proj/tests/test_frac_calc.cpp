#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pgst/frac_calc.hpp"
#include "pgst/quadrature.hpp"

using namespace pgst;

namespace {

const double kPi = std::numbers::pi;
const double kSqrtPi = std::sqrt(kPi);

// closed form I^a t^b = Gamma(b+1)/Gamma(b+1+a) t^{b+a}
double monomial_frac_integral(double alpha, double beta, double t) {
    return std::tgamma(beta + 1.0) / std::tgamma(beta + 1.0 + alpha) *
           std::pow(t, beta + alpha);
}

// independent weakly singular quadrature for I^{1/2}_+ g: substitution s = t - r^2
double iplus_half_quadrature(const std::function<double(double)>& g, double t) {
    auto f = [&](double r) { return g(std::max(0.0, t - r * r)); };
    return 2.0 / kSqrtPi * adaptive_integrate(f, 0.0, std::sqrt(t), 1e-12);
}

PiecewisePoly tent(double a, double m, double b, double peak = 1.0) {
    return PiecewisePoly::linear_interpolant({a, m, b}, {0.0, peak, 0.0});
}

PiecewisePoly random_poly(std::mt19937_64& rng, int pieces, double lo, double hi) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::vector<double> bp(static_cast<size_t>(pieces) + 1);
    for (int i = 0; i <= pieces; ++i)
        bp[static_cast<size_t>(i)] = lo + (hi - lo) * i / pieces;
    std::vector<PiecewisePoly::Coeffs> pc(static_cast<size_t>(pieces));
    for (auto& c : pc) c = {coef(rng), coef(rng), coef(rng), coef(rng)};
    return PiecewisePoly(std::move(bp), std::move(pc));
}

PiecewisePoly random_pl(std::mt19937_64& rng, int cells, double lo, double hi,
                        bool zero_left, bool zero_right) {
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::vector<double> nodes(static_cast<size_t>(cells) + 1);
    std::vector<double> values(static_cast<size_t>(cells) + 1);
    for (int i = 0; i <= cells; ++i) {
        nodes[static_cast<size_t>(i)] = lo + (hi - lo) * i / cells;
        values[static_cast<size_t>(i)] = val(rng);
    }
    if (zero_left) values.front() = 0.0;
    if (zero_right) values.back() = 0.0;
    return PiecewisePoly::linear_interpolant(nodes, values);
}

double h1_norm(const PiecewisePoly& p) {
    const PiecewisePoly d = p.derivative();
    return std::sqrt(p.l2_norm_sq() + d.inner_product(d));
}

// Fourier-side Gagliardo seminorm over the line: int |xi| |F(xi)|^2 dxi
double gagliardo_fourier_oracle(const GridFunction& u) {
    const size_t n = u.size();
    size_t m = 1;
    while (m < 8 * n) m <<= 1;
    std::vector<std::complex<double>> a(m, 0.0);
    for (size_t i = 0; i < n; ++i) a[i] = u.values[i];
    fft_radix2(a, false);
    const double h = u.step();
    const double dxi = 2.0 * kPi / (static_cast<double>(m) * h);
    double sum = 0.0;
    for (size_t k = 0; k < m; ++k) {
        const double kk = (k <= m / 2) ? static_cast<double>(k)
                                       : static_cast<double>(k) - static_cast<double>(m);
        const double xi = kk * dxi;
        sum += std::abs(xi) * std::norm(a[k] * h);
    }
    return sum * dxi;  // gag = int |xi| |F(xi)|^2 dxi
}

}  // namespace

TEST_CASE("forward fractional integral: closed forms and edge cases") {
    const PiecewisePoly one = PiecewisePoly::constant(1.0, 0.0, 2.0);
    const double v = frac_integral_plus(one, 0.5, 1.0);
    CHECK(v == doctest::Approx(2.0 / kSqrtPi).epsilon(1e-13));
    CHECK(v == doctest::Approx(monomial_frac_integral(0.5, 0.0, 1.0)).epsilon(1e-13));

    // linear and quadratic monomials against the Gamma-quotient closed form
    const PiecewisePoly lin = PiecewisePoly::monomial(1.0, 1, 0.0, 2.0);
    CHECK(frac_integral_plus(lin, 0.5, 1.5) ==
          doctest::Approx(monomial_frac_integral(0.5, 1.0, 1.5)).epsilon(1e-13));
    const PiecewisePoly quad = PiecewisePoly::monomial(1.0, 2, 0.0, 2.0);
    CHECK(frac_integral_plus(quad, 0.25, 1.25) ==
          doctest::Approx(monomial_frac_integral(0.25, 2.0, 1.25)).epsilon(1e-12));

    const PiecewisePoly zero = PiecewisePoly::constant(0.0, 0.0, 2.0);
    CHECK(frac_integral_plus(zero, 0.5, 0.7) == 0.0);
    CHECK(frac_integral_plus(zero, 0.3, 1.9) == 0.0);

    CHECK_THROWS_AS(frac_integral_plus(one, 1.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(frac_integral_plus(one, 0.5, -0.5), std::domain_error);
}

TEST_CASE("forward fractional integral: half-order composition equals one full order") {
    const PiecewisePoly one = PiecewisePoly::constant(1.0, 0.0, 2.0);
    for (double t : {0.3, 0.9, 1.5}) {
        auto inner = [&](double s) { return frac_integral_plus(one, 0.5, s); };
        const double nested = iplus_half_quadrature(inner, t);
        CHECK(nested == doctest::Approx(t).epsilon(1e-9));
    }

    std::mt19937_64 rng(7001);
    for (int rep = 0; rep < 4; ++rep) {
        const PiecewisePoly phi = random_poly(rng, 5, 0.0, 4.0);
        const double scale = 1.0 + phi.sup_norm();
        for (double t : {0.37, 1.13, 2.71, 3.91}) {
            auto inner = [&](double s) { return frac_integral_plus(phi, 0.5, s); };
            const double nested = iplus_half_quadrature(inner, t);
            const double exact = phi.clipped(0.0, t).integral();  // I^1 phi
            CHECK(std::abs(nested - exact) <= 1e-8 * scale);
        }
    }
}

TEST_CASE("backward fractional integral: closed forms and zero input") {
    const PiecewisePoly box = PiecewisePoly::constant(1.0, 0.0, 1.0);
    CHECK(frac_integral_minus(box, 0.5, 0.5) ==
          doctest::Approx(std::sqrt(2.0) / kSqrtPi).epsilon(1e-13));
    const PiecewisePoly zero = PiecewisePoly::constant(0.0, 0.0, 1.0);
    CHECK(frac_integral_minus(zero, 0.5, 0.25) == 0.0);
    // beyond the support the backward integral vanishes
    CHECK(frac_integral_minus(box, 0.5, 1.5) == 0.0);
}

TEST_CASE("fractional integration by parts pairing") {
    std::mt19937_64 rng(7002);
    for (double alpha : {0.5, 0.25}) {
        for (int rep = 0; rep < 5; ++rep) {
            const PiecewisePoly psi = random_poly(rng, 4, 0.0, 3.0);
            const PiecewisePoly phi = random_poly(rng, 5, 0.5, 4.0);
            auto lhs_f = [&](double t) { return frac_integral_plus(psi, alpha, t) * phi(t); };
            const double lhs =
                adaptive_integrate_breakpoints(lhs_f, phi.breakpoints(), 1e-12);
            auto rhs_f = [&](double t) { return psi(t) * frac_integral_minus(phi, alpha, t); };
            const double rhs =
                adaptive_integrate_breakpoints(rhs_f, psi.breakpoints(), 1e-12);
            const double scale = 1.0 + psi.l2_norm() * phi.l2_norm();
            CHECK(std::abs(lhs - rhs) <= 1e-8 * scale);
        }
    }
}

TEST_CASE("trial-side half derivative") {
    const PiecewisePoly w = tent(0.0, 1.0, 2.0);  // w(s)=s near 0
    CHECK(frac_deriv_plus(w, 0.25) == doctest::Approx(1.0 / kSqrtPi).epsilon(1e-13));

    const PiecewisePoly zero = PiecewisePoly::constant(0.0, 0.0, 2.0);
    CHECK(frac_deriv_plus(zero, 0.5) == 0.0);

    FracEvalInfo info;
    (void)frac_deriv_plus(w, 1.0, &info);
    CHECK(info.at_breakpoint);
    (void)frac_deriv_plus(w, 0.5, &info);
    CHECK(!info.at_breakpoint);

    const PiecewisePoly bad = PiecewisePoly::constant(1.0, 0.0, 1.0);
    CHECK_THROWS_AS(frac_deriv_plus(bad, 0.5), std::domain_error);
}

TEST_CASE("trial-side half derivative: grid-sampled fallback") {
    // sqrt(s) has the constant half-derivative Gamma(3/2)
    const GridFunction w =
        GridFunction::sample([](double s) { return std::sqrt(std::max(0.0, s)); }, 0.0,
                             1.0, 200001);
    const double expected = kSqrtPi / 2.0;
    for (double t : {0.25, 0.49}) {
        const double v = frac_deriv_plus(w, t);
        CHECK(std::abs(v - expected) <= 0.02 * expected);
    }
}

TEST_CASE("test-side half derivative: finite differences of the backward integral") {
    const PiecewisePoly v = tent(0.0, 1.0, 2.0);
    CHECK(frac_deriv_minus(PiecewisePoly::constant(0.0, 0.0, 2.0), 0.5) == 0.0);
    const double h = 1e-5;
    for (double t : {0.3, 0.8, 1.4}) {
        const double fd = -(frac_integral_minus(v, 0.5, t + h) -
                            frac_integral_minus(v, 0.5, t - h)) /
                          (2.0 * h);
        CHECK(std::abs(frac_deriv_minus(v, t) - fd) <= 1e-6);
    }
}

TEST_CASE("duality: half derivatives reproduce the classical pairing") {
    std::mt19937_64 rng(7003);
    for (int rep = 0; rep < 5; ++rep) {
        const PiecewisePoly w = random_pl(rng, 6, 0.0, 4.0, true, true);
        const PiecewisePoly v = random_pl(rng, 5, 0.0, 3.5, false, true);
        std::vector<double> panels;
        for (double x : w.breakpoints()) panels.push_back(x);
        for (double x : v.breakpoints()) panels.push_back(x);
        std::sort(panels.begin(), panels.end());
        panels.erase(std::unique(panels.begin(), panels.end()), panels.end());
        auto prod = [&](double t) {
            return frac_deriv_plus(w, t) * frac_deriv_minus(v, t);
        };
        const double lhs = adaptive_integrate_breakpoints(prod, panels, 1e-10);
        const double rhs = -w.inner_product(v.derivative());
        const double scale = 1.0 + h1_norm(w) * h1_norm(v);
        CHECK(std::abs(lhs - rhs) <= 1e-6 * scale);
    }
}

TEST_CASE("hilbert multiplier family") {
    auto bump = [](double t, double radius) {
        const double x = t / radius;
        if (std::abs(x) >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - x * x));
    };

    SUBCASE("alpha = 0 is the identity") {
        const GridFunction u = GridFunction::sample(
            [&](double t) { return bump(t, 10.0) * std::sin(t); }, -16.0, 16.0, 1024);
        const GridFunction hu = hilbert_alpha(u, 0.0);
        for (size_t i = 0; i < u.size(); ++i)
            CHECK(hu.values[i] == doctest::Approx(u.values[i]).epsilon(1e-12));
    }

    SUBCASE("windowed cosine maps to sine in the window core") {
        auto fu = [&](double t) { return bump(t, 60.0) * std::cos(t); };
        const GridFunction u = GridFunction::sample(fu, -64.0, 64.0, 8192);
        const GridFunction hu = hilbert_transform(u);
        for (double t : {-2.5, -1.0, 0.0, 0.7, 1.3, 2.9}) {
            const double expected = std::sin(t) * bump(t, 60.0);
            CHECK(std::abs(hu(t) - expected) <= 3e-2);
        }
        // principal-value quadrature oracle (on the analytic integrand)
        for (double t : {0.0, 0.7, 1.3}) {
            auto pv = [&](double r) { return (fu(t - r) - fu(t + r)) / r; };
            const double oracle = adaptive_integrate(pv, 1e-9, 130.0, 1e-9) / kPi;
            CHECK(std::abs(hu(t) - oracle) <= 2e-3);
        }
    }

    SUBCASE("l2 contraction") {
        std::mt19937_64 rng(7004);
        std::uniform_real_distribution<double> amp(-1.0, 1.0);
        for (int rep = 0; rep < 3; ++rep) {
            double a1 = amp(rng), a2 = amp(rng), a3 = amp(rng);
            const GridFunction u = GridFunction::sample(
                [&](double t) {
                    return bump(t, 12.0) * (a1 * std::sin(t) + a2 * std::cos(2.1 * t) +
                                            a3 * std::sin(0.4 * t));
                },
                -16.0, 16.0, 2048);
            const GridFunction hu = hilbert_transform(u);
            CHECK(hu.l2_norm_sq() <= u.l2_norm_sq() * (1.0 + 1e-6) + 1e-12);
        }
    }

    SUBCASE("truncation warning for non-decaying input") {
        const GridFunction u =
            GridFunction::sample([](double t) { return std::cos(t); }, -16.0, 16.0, 1024);
        HilbertInfo info;
        (void)hilbert_alpha(u, 0.25, &info);
        CHECK(info.truncation_warning);
    }
}

TEST_CASE("sign convention: backward half derivative of the transform") {
    // mean-zero smooth function so the transform decays fast
    auto f = [](double t) {
        const double x = t / 10.0;
        if (std::abs(x) >= 1.0) return 0.0;
        const double b = std::exp(1.0 - 1.0 / (1.0 - x * x));
        return -2.0 * t / 100.0 * b / ((1.0 - x * x) * (1.0 - x * x));  // bump'
    };
    const GridFunction u = GridFunction::sample(f, -64.0, 64.0, 8192);
    const GridFunction hu = hilbert_transform(u);
    const GridFunction dplus = frac_deriv_plus_fourier(u);
    const GridFunction dmh = frac_deriv_minus_fourier(hu);
    double err = 0.0, scale = 0.0, dot = 0.0, n1 = 0.0, n2 = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        err = std::max(err, std::abs(dmh.values[i] + dplus.values[i]));
        scale = std::max(scale, std::abs(dplus.values[i]));
        dot += dmh.values[i] * (-dplus.values[i]);
        n1 += dmh.values[i] * dmh.values[i];
        n2 += dplus.values[i] * dplus.values[i];
    }
    // the residual is window truncation / periodization of the transform's
    // algebraic tail; a flipped sign convention would leave an O(scale)
    // mismatch and a correlation of -1 instead
    CHECK(err <= 1e-2 * (1.0 + scale));
    CHECK(dot / std::sqrt(n1 * n2) >= 0.999);
}

TEST_CASE("multiplier route anchored to the closed-form half derivative") {
    // ties the Fourier symbol to the time-domain definition on the positive axis
    auto f = [](double t) {
        const double x = (t - 11.0) / 10.0;
        if (std::abs(x) >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - x * x));
    };
    const GridFunction u = GridFunction::sample(f, 0.0, 64.0, 8192);
    const GridFunction dplus = frac_deriv_plus_fourier(u);
    const PiecewisePoly u_pl = u.to_piecewise_linear();
    for (double t : {6.0, 11.0, 16.5}) {
        const double closed = frac_deriv_plus(u_pl, t);
        CHECK(std::abs(dplus(t) - closed) <= 5e-3);
    }
}

TEST_CASE("intrinsic half-order norms") {
    SUBCASE("zero input") {
        const FracNormReport r = norm_h12(PiecewisePoly::constant(0.0, 0.0, 2.0), true);
        CHECK(r.l2_sq == 0.0);
        CHECK(r.gagliardo_sq == 0.0);
        CHECK(r.weight_sq == 0.0);
        CHECK(r.total_h1200_sq == 0.0);
        CHECK(!r.diverged);
    }

    SUBCASE("constants have vanishing windowed seminorm") {
        for (double window : {4.0, 16.0, 64.0}) {
            const PiecewisePoly c = PiecewisePoly::constant(3.0, 0.0, window);
            const FracNormReport r = norm_h12_windowed(c, false, window);
            CHECK(std::abs(r.gagliardo_sq) <= 1e-12);
        }
    }

    SUBCASE("tent: zero-extension norm bracket") {
        const PiecewisePoly w = tent(0.0, 1.0, 2.0);
        const FracNormReport lhs = norm_h12(w, true);
        REQUIRE(!lhs.diverged);
        const PiecewisePoly ew = extend_zero(w, 8.0);
        const double rhs = w.l2_norm_sq() + gagliardo_line_sq(ew);
        const double lo = lhs.total_h1200_sq;
        CHECK(rhs >= 0.95 * lo);
        CHECK(rhs <= 2.05 * lo);
    }

    SUBCASE("jump input reported as divergent") {
        const PiecewisePoly ind = PiecewisePoly::constant(1.0, 0.5, 1.0);
        const FracNormReport r = norm_h12(ind, false);
        CHECK(r.diverged);
    }

    SUBCASE("weighted integral diverges when u(0) != 0") {
        const PiecewisePoly c = PiecewisePoly::constant(1.0, 0.0, 1.0);
        bool div = false;
        (void)weighted_zero_integral(c, &div);
        CHECK(div);
    }
}

TEST_CASE("line seminorm: cell engine against the Fourier oracle") {
    const PiecewisePoly w = tent(0.0, 1.0, 2.0);
    const PiecewisePoly ew = extend_zero(w, 8.0);
    const double engine = gagliardo_line_sq(ew);
    const GridFunction g = GridFunction::sample(w, -32.0, 32.0, 8192);
    const double fourier = gagliardo_fourier_oracle(g);
    CHECK(engine == doctest::Approx(fourier).epsilon(2e-3));
}

TEST_CASE("norm characterization via half derivatives on the line") {
    auto f = [](double t) {
        const double x = t / 12.0;
        if (std::abs(x) >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - x * x)) * std::sin(1.7 * t);
    };
    const GridFunction u = GridFunction::sample(f, -64.0, 64.0, 16384);
    const double dplus = frac_deriv_plus_fourier(u).l2_norm_sq();
    const double dminus = frac_deriv_minus_fourier(u).l2_norm_sq();
    CHECK(std::abs(dplus - dminus) <= 1e-4 * dplus);
    // cell engine on a coarser interpolant (its cost is quadratic in cells)
    const GridFunction uc = GridFunction::sample(f, -14.0, 14.0, 1024);
    const double gag = gagliardo_line_sq(uc.to_piecewise_linear());
    // the two-sided equivalence constant of the seminorm is 2*pi exactly
    const double ratio = gag / dplus;
    CHECK(ratio == doctest::Approx(2.0 * kPi).epsilon(5e-2));
}

TEST_CASE("extension by zero and restriction") {
    const PiecewisePoly w = tent(0.0, 1.0, 2.0);
    const PiecewisePoly ew = extend_zero(w, 8.0);
    CHECK(ew.support_left() == -8.0);
    CHECK(ew(-0.5) == 0.0);
    CHECK(ew(0.5) == doctest::Approx(w(0.5)));

    SUBCASE("zero input") {
        const PiecewisePoly z = extend_zero(PiecewisePoly::constant(0.0, 0.0, 2.0), 4.0);
        CHECK(z(-1.0) == 0.0);
        CHECK(z(1.0) == 0.0);
    }

    SUBCASE("round trip") {
        const PiecewisePoly back = restrict_positive(ew);
        CHECK(back.support_left() == doctest::Approx(0.0));
        CHECK(back.support_right() == doctest::Approx(2.0));
        for (double t : {0.1, 0.9, 1.5, 1.99})
            CHECK(back(t) == doctest::Approx(w(t)).epsilon(1e-14));
    }

    SUBCASE("commutation of the forward half derivative with zero extension") {
        for (double t : {0.3, 0.7}) {
            const double before = frac_deriv_plus(w, t);
            const double after = frac_deriv_plus(restrict_positive(ew), t);
            CHECK(std::abs(before - after) <= 1e-8);
        }
    }
}
