#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pgst/interval_basis.hpp"
#include "pgst/linalg.hpp"
#include "pgst/quadrature.hpp"

using namespace pgst;

namespace {

Mat l2_gram(const IntervalBasis& b, int up_to_level) {
    const int n = b.total_count(up_to_level);
    Mat g(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& pi = b.eval(b.index_at(i));
        for (int j = i; j < n; ++j) {
            const double v = pi.inner_product(b.eval(b.index_at(j)));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

Mat h1_rescaled_gram(const IntervalBasis& b, int up_to_level) {
    const int n = b.total_count(up_to_level);
    Mat g(n, n);
    std::vector<PiecewisePoly> der(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) der[static_cast<size_t>(i)] = b.eval(b.index_at(i)).derivative();
    for (int i = 0; i < n; ++i) {
        const auto idx_i = b.index_at(i);
        const auto& pi = b.eval(idx_i);
        for (int j = i; j < n; ++j) {
            const auto idx_j = b.index_at(j);
            const double h1 = pi.inner_product(b.eval(idx_j)) +
                              der[static_cast<size_t>(i)].inner_product(der[static_cast<size_t>(j)]);
            const double v = h1 / (b.rescale_weight(idx_i, 1.0) * b.rescale_weight(idx_j, 1.0));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

}  // namespace

TEST_CASE("coarsest trial basis vanishes at the origin and is normalized") {
    const IntervalBasis b = IntervalBasis::build(BasisFlavor::temporal_trial, 2, 2, 1.0, 0);
    CHECK(b.count(0) == b.coarse_cells() - 1);
    for (int t = 0; t < b.count(0); ++t) {
        const auto& p = b.eval(WaveletIndex{0, t});
        CHECK(p(0.0) == 0.0);
        CHECK(p.l2_norm_sq() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(p.max_jump() <= 1e-12);
    }
}

TEST_CASE("test basis keeps a function active at the origin") {
    const IntervalBasis b = IntervalBasis::build(BasisFlavor::temporal_test, 2, 2, 1.0, 3);
    bool found = false;
    for (int l = 0; l <= 3; ++l)
        for (int t = 0; t < b.count(l); ++t)
            if (std::abs(b.eval(WaveletIndex{l, t})(0.0)) > 0.5) found = true;
    CHECK(found);
    CHECK(b.count(0) == b.coarse_cells());
}

TEST_CASE("vanishing moments of all wavelets") {
    for (BasisFlavor f : {BasisFlavor::temporal_trial, BasisFlavor::temporal_test,
                          BasisFlavor::spatial_dirichlet}) {
        const IntervalBasis b = IntervalBasis::build(f, 2, 2, 1.0, 3);
        for (int l = 1; l <= 3; ++l)
            for (int t = 0; t < b.count(l); ++t) {
                CHECK(b.moment_residual(WaveletIndex{l, t}, 0) <= 1e-10);
                CHECK(b.moment_residual(WaveletIndex{l, t}, 1) <= 1e-10);
            }
    }
}

TEST_CASE("supports halve per level and functions stay continuous") {
    const IntervalBasis b = IntervalBasis::build(BasisFlavor::temporal_trial, 2, 2, 2.0, 6);
    for (int l = 2; l <= 6; ++l)
        CHECK(b.max_support_length(l) ==
              doctest::Approx(0.5 * b.max_support_length(l - 1)).epsilon(1e-12));
    for (int l = 1; l <= 6; ++l) {
        CHECK(b.max_overlap_count(l) <= 6);
        for (int t = 0; t < b.count(l); ++t)
            CHECK(b.eval(WaveletIndex{l, t}).max_jump() <= 1e-12);
    }
}

TEST_CASE("growth of the sup norms matches the level scaling") {
    // || psi ||_inf ~ 2^{l/2} and || psi' ||_inf ~ 2^{3l/2} for normalized hats
    const IntervalBasis b = IntervalBasis::build(BasisFlavor::temporal_test, 2, 2, 1.0, 7);
    double c0 = 0.0, c1 = 0.0;
    for (int l = 1; l <= 7; ++l) {
        double s0 = 0.0, s1 = 0.0;
        for (int t = 0; t < b.count(l); ++t) {
            const auto& p = b.eval(WaveletIndex{l, t});
            s0 = std::max(s0, p.sup_norm());
            s1 = std::max(s1, p.derivative_sup_norm());
        }
        c0 = std::max(c0, s0 / std::pow(2.0, 0.5 * l));
        c1 = std::max(c1, s1 / std::pow(2.0, 1.5 * l));
    }
    CHECK(c0 < 4.0);
    CHECK(c1 < 32.0);
}

TEST_CASE("transform round trip on random data") {
    std::mt19937_64 rng(9001);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (BasisFlavor f : {BasisFlavor::temporal_trial, BasisFlavor::temporal_test}) {
        const IntervalBasis b = IntervalBasis::build(f, 2, 2, 8.0, 6);
        std::vector<double> nodal(b.node_count(6), 0.0);
        for (size_t i = 0; i < nodal.size(); ++i)
            nodal[i] = b.node_admissible(6, static_cast<int>(i)) ? val(rng) : 0.0;
        const std::vector<double> coeffs = b.analyze(nodal, 6);
        const std::vector<double> back = b.synthesize(coeffs, 6);
        double err = 0.0;
        for (size_t i = 0; i < nodal.size(); ++i)
            err = std::max(err, std::abs(back[i] - nodal[i]));
        CHECK(err <= 1e-12);
    }
}

TEST_CASE("biorthogonality through the transform") {
    const IntervalBasis b = IntervalBasis::build(BasisFlavor::temporal_trial, 2, 2, 1.0, 6);
    std::mt19937_64 rng(9002);
    std::uniform_int_distribution<int> pick(0, b.total_count(6) - 1);
    for (int rep = 0; rep < 25; ++rep) {
        const int flat = pick(rng);
        const WaveletIndex idx = b.index_at(flat);
        const auto& psi = b.eval(idx);
        std::vector<double> nodal(b.node_count(6));
        const double h = b.grid_step(6);
        for (size_t i = 0; i < nodal.size(); ++i) nodal[i] = psi(static_cast<double>(i) * h);
        const std::vector<double> coeffs = b.analyze(nodal, 6);
        for (int j = 0; j < b.total_count(6); ++j) {
            const double expect = (j == flat) ? 1.0 : 0.0;
            CHECK(std::abs(coeffs[static_cast<size_t>(j)] - expect) <= 1e-10);
        }
    }
}

TEST_CASE("dual projection") {
    const IntervalBasis b = IntervalBasis::build(BasisFlavor::temporal_test, 2, 2, 1.0, 10);

    SUBCASE("zero function maps to zero coefficients") {
        const auto c = b.dual_project(3, [](double) { return 0.0; });
        for (double v : c) CHECK(v == 0.0);
    }

    SUBCASE("projection is the identity on the span") {
        std::mt19937_64 rng(9003);
        std::uniform_real_distribution<double> val(-1.0, 1.0);
        std::vector<double> c(static_cast<size_t>(b.total_count(3)));
        for (auto& v : c) v = val(rng);
        const PiecewisePoly g = b.synthesize_function(c, 3);
        const auto back = b.dual_project(3, [&](double t) { return g(t); });
        for (size_t i = 0; i < c.size(); ++i) CHECK(std::abs(back[i] - c[i]) <= 1e-10);
    }

    SUBCASE("idempotence") {
        auto f = [](double t) { return std::sin(3.0 * t) + t * t; };
        const auto c1 = b.dual_project(4, f);
        const PiecewisePoly p1 = b.synthesize_function(c1, 4);
        const auto c2 = b.dual_project(4, [&](double t) { return p1(t); });
        for (size_t i = 0; i < c1.size(); ++i) CHECK(std::abs(c2[i] - c1[i]) <= 1e-10);
    }

    SUBCASE("linear polynomials reproduced on interior cells") {
        auto f = [](double t) { return 2.0 * t + 0.3; };
        const auto c = b.dual_project(4, f);
        const PiecewisePoly p = b.synthesize_function(c, 4);
        for (double t : {0.3, 0.41, 0.55, 0.68})
            CHECK(p(t) == doctest::Approx(f(t)).epsilon(1e-10));
    }

    SUBCASE("second-order decay on a smooth function") {
        auto f = [](double t) { return std::sin(std::numbers::pi * t); };
        std::vector<double> logerr;
        for (int k = 2; k <= 7; ++k) {
            const auto c = b.dual_project(k, f);
            const PiecewisePoly p = b.synthesize_function(c, k);
            auto err2 = [&](double t) {
                const double d = f(t) - p(t);
                return d * d;
            };
            const double e2 = gauss_integrate_panels(err2, p.breakpoints(), 6);
            logerr.push_back(0.5 * std::log2(e2));
        }
        // least-squares slope of log2(error) vs level
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int n = static_cast<int>(logerr.size());
        for (int i = 0; i < n; ++i) {
            sx += i;
            sy += logerr[static_cast<size_t>(i)];
            sxx += i * i;
            sxy += i * logerr[static_cast<size_t>(i)];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        CHECK(-slope >= 1.9);
    }
}

TEST_CASE("diagonal rescaling weights") {
    const IntervalBasis b = IntervalBasis::build(BasisFlavor::temporal_trial, 2, 2, 1.0, 5);
    CHECK(b.rescale_weight(WaveletIndex{3, 0}, 0.0) == 1.0);
    CHECK(b.rescale_weight(WaveletIndex{4, 1}, 0.5) == doctest::Approx(4.0));
    CHECK(b.rescale_weight(WaveletIndex{2, 0}, 1.0) == doctest::Approx(4.0));
}

TEST_CASE("riesz stability of the gram spectra across levels") {
    // the family's bracket endpoints settle geometrically; stability is
    // checked as a successive-level change of at most 10% from level 4 on
    for (BasisFlavor f : {BasisFlavor::temporal_trial, BasisFlavor::temporal_test,
                          BasisFlavor::spatial_dirichlet}) {
        const IntervalBasis b = IntervalBasis::build(f, 2, 2, 1.0, 7);
        double prev_lo = 0.0, prev_hi = 0.0;
        for (int k : {4, 5, 6, 7}) {
            const auto [lo, hi] = sym_eig_range(l2_gram(b, k));
            CHECK(lo > 0.0);
            if (k > 4) {
                CHECK(lo >= prev_lo * 0.9 - 1e-12);
                CHECK(hi <= prev_hi * 1.1 + 1e-12);
            }
            prev_lo = lo;
            prev_hi = hi;
        }
        double prev_ratio = 0.0;
        for (int k : {4, 5, 6, 7}) {
            const auto [lo, hi] = sym_eig_range(h1_rescaled_gram(b, k));
            CHECK(lo > 0.0);
            const double ratio = hi / lo;
            if (k > 4) CHECK(ratio <= prev_ratio * 1.10 + 1e-12);
            prev_ratio = ratio;
        }
    }
}

TEST_CASE("boundary values are exact zeros") {
    const IntervalBasis trial = IntervalBasis::build(BasisFlavor::temporal_trial, 2, 2, 8.0, 5);
    for (int l = 0; l <= 5; ++l)
        for (int t = 0; t < trial.count(l); ++t)
            CHECK(trial.boundary_value_left(WaveletIndex{l, t}) == 0.0);
    const IntervalBasis sp = IntervalBasis::build(BasisFlavor::spatial_dirichlet, 2, 2, 1.0, 5);
    for (int l = 0; l <= 5; ++l)
        for (int t = 0; t < sp.count(l); ++t) {
            const auto& p = sp.eval(WaveletIndex{l, t});
            CHECK(std::abs(p(0.0)) == 0.0);
            CHECK(std::abs(p.eval_left(1.0)) <= 1e-14);
        }
}

TEST_CASE("build rejects unsupported parameters") {
    CHECK_THROWS_AS(IntervalBasis::build(BasisFlavor::temporal_trial, 3, 3, 1.0, 2),
                    std::invalid_argument);
    CHECK_THROWS_AS(IntervalBasis::build(BasisFlavor::temporal_trial, 2, 2, 1.0, 15),
                    std::invalid_argument);
}
