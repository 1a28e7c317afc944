#include <cmath>
#include <random>

#include "doctest.h"
#include "pgst/solvers.hpp"

using namespace pgst;

namespace {

struct Setup {
    IntervalBasis trial = IntervalBasis::build(BasisFlavor::temporal_trial, 2, 2, 8.0, 5);
    IntervalBasis test = IntervalBasis::build(BasisFlavor::temporal_test, 2, 2, 8.0, 5);
    IntervalBasis space = IntervalBasis::build(BasisFlavor::spatial_dirichlet, 2, 2, 1.0, 5);
    ProblemSpec problem = manufactured_heat_problem(1, 8.0);

    TensorOperator make_op(int cap) const {
        auto [m, a] = assemble_spatial(problem, space, 0, cap);
        return TensorOperator(&trial, &test, {&space}, assemble_temporal_D(trial, test, cap),
                              assemble_temporal_G(trial, test, cap), {std::move(m)},
                              {std::move(a)}, problem.reaction, 1);
    }
};

SpaceTimeIndex st_index(int tl, int tt, int xl, int xt) {
    SpaceTimeIndex i;
    i.dim = 1;
    i.time = WaveletIndex{tl, tt};
    i.space[0] = WaveletIndex{xl, xt};
    return i;
}

double coeff_error(const SparseCoeffVector& a, const SparseCoeffVector& b) {
    SparseCoeffVector d = a;
    d -= b;
    return d.l2_norm();
}

}  // namespace

TEST_CASE("fixed solve recovers planted coefficients") {
    const Setup s;
    const TensorOperator op = s.make_op(4);
    SparseSetParams params;
    const IndexSet trial_set = build_sparse_set(3, 'B', params, op.trial_counts());
    const IndexSet test_set = build_sparse_set(3, 'B', params, op.test_counts());
    const SectionOperator sec(op, test_set, trial_set);

    std::mt19937_64 rng(19001);
    std::normal_distribution<double> val(0.0, 1.0);
    Vec x(sec.n_cols());
    for (int i = 0; i < x.size(); ++i) x(i) = val(rng);
    const Vec f = sec.apply(x);
    SparseCoeffVector rhs;
    for (int i = 0; i < sec.n_rows(); ++i) rhs.set(test_set[static_cast<size_t>(i)], f(i));

    const SolveReport rep = solve_fixed(op, trial_set, test_set, rhs);
    REQUIRE(rep.converged);
    double err = 0.0;
    for (int i = 0; i < sec.n_cols(); ++i)
        err = std::max(err,
                       std::abs(rep.coefficients.get(trial_set[static_cast<size_t>(i)]) - x(i)));
    CHECK(err <= 1e-8 * (1.0 + x.norm()));
}

TEST_CASE("fixed solve leaves an orthogonal residual") {
    const Setup s;
    const TensorOperator op = s.make_op(4);
    SparseSetParams params;
    const IndexSet trial_set = build_sparse_set(2, 'B', params, op.trial_counts());
    const IndexSet test_set = build_sparse_set(2, 'B', params, op.test_counts());
    const SparseCoeffVector rhs = assemble_rhs(s.problem, op, test_set);
    const SolveReport rep = solve_fixed(op, trial_set, test_set, rhs);
    REQUIRE(rep.converged);
    const SectionOperator sec(op, test_set, trial_set);
    Vec u(sec.n_cols()), f(sec.n_rows());
    for (int i = 0; i < sec.n_cols(); ++i)
        u(i) = rep.coefficients.get(trial_set[static_cast<size_t>(i)]);
    for (int i = 0; i < sec.n_rows(); ++i) f(i) = rhs.get(test_set[static_cast<size_t>(i)]);
    const Vec resid = sec.apply(u) - f;
    const Vec ortho = sec.apply_transpose(resid);
    CHECK(ortho.norm() <= 1e-8 * (1.0 + f.norm()));
}

TEST_CASE("manufactured errors decrease under refinement") {
    const Setup s;
    const TensorOperator op = s.make_op(5);
    SparseSetParams params;
    const IndexSet ref_trial = build_sparse_set(5, 'B', params, op.trial_counts());
    const IndexSet ref_test = build_sparse_set(5, 'B', params, op.test_counts());
    const SparseCoeffVector ref_rhs = assemble_rhs(s.problem, op, ref_test);
    const SolveReport ref = solve_fixed(op, ref_trial, ref_test, ref_rhs);
    REQUIRE(ref.converged);
    double prev = 1e300;
    for (int k = 2; k <= 4; ++k) {
        const IndexSet tr = build_sparse_set(k, 'B', params, op.trial_counts());
        const IndexSet te = build_sparse_set(k, 'B', params, op.test_counts());
        const SolveReport rep = solve_fixed(op, tr, te, assemble_rhs(s.problem, op, te));
        REQUIRE(rep.converged);
        const double err = coeff_error(rep.coefficients, ref.coefficients);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("discrete inf-sup estimates") {
    const Setup s;
    const TensorOperator op = s.make_op(4);

    SUBCASE("singleton section equals the entry magnitude") {
        const SpaceTimeIndex r = st_index(1, 1, 1, 1), c = st_index(1, 1, 1, 1);
        IndexSet rows(IndexSetKind::adaptive, {r});
        IndexSet cols(IndexSetKind::adaptive, {c});
        const double g = estimate_infsup(op, cols, rows);
        CHECK(g == doctest::Approx(std::abs(op.entry(r, c))).epsilon(1e-8));
    }

    SUBCASE("levels stay above half the level-1 value") {
        SparseSetParams params;
        const double g1 = estimate_infsup(op, build_sparse_set(1, 'B', params, op.trial_counts()),
                                          build_sparse_set(1, 'B', params, op.test_counts()));
        for (int k = 2; k <= 4; ++k) {
            const double gk =
                estimate_infsup(op, build_sparse_set(k, 'B', params, op.trial_counts()),
                                build_sparse_set(k, 'B', params, op.test_counts()));
            CHECK(gk >= 0.5 * g1);
        }
    }

    SUBCASE("enlarging the test set never decreases the value") {
        SparseSetParams params;
        const IndexSet cols = build_sparse_set(2, 'B', params, op.trial_counts());
        const IndexSet small = build_sparse_set(2, 'B', params, op.test_counts());
        const IndexSet large = build_sparse_set(3, 'B', params, op.test_counts());
        const double g_small = estimate_infsup(op, cols, small);
        const double g_large = estimate_infsup(op, cols, large);
        CHECK(g_large >= g_small - 1e-8);
    }
}

TEST_CASE("adaptive solver") {
    const Setup s;
    const TensorOperator op = s.make_op(4);
    const CompressedOperator cop(op, 3);

    SUBCASE("zero data converges immediately") {
        const RhsProvider rhs(SparseCoeffVector(), 0.0);
        const SolveReport rep = solve_adaptive(cop, rhs, 1e-3);
        CHECK(rep.converged);
        CHECK(rep.iterations == 1);
        CHECK(rep.coefficients.support_size() == 0);
    }

    SUBCASE("certified error dominates the true error") {
        SparseSetParams params;
        const IndexSet deep_test = build_full_tensor_set(4, 4, op.test_counts());
        const IndexSet deep_trial = build_full_tensor_set(4, 4, op.trial_counts());
        const SparseCoeffVector f_ref = assemble_rhs(s.problem, op, deep_test);
        const RhsProvider rhs(f_ref, 1e-10);
        // the capped-universe truth
        const SolveReport truth = solve_fixed(op, deep_trial, deep_test, f_ref);
        REQUIRE(truth.converged);
        double prev_support = 0;
        for (double eps : {3e-1, 1e-1, 3e-2}) {
            const SolveReport rep = solve_adaptive(cop, rhs, eps);
            REQUIRE(rep.converged);
            const double true_err = coeff_error(rep.coefficients, truth.coefficients);
            CHECK(true_err <= eps);
            CHECK(rep.residual_bound >= true_err * 0.99);
            CHECK(rep.residual_bound <= eps);
            CHECK(static_cast<double>(rep.coefficients.support_size()) + 1e-9 >=
                  prev_support * 0.3);  // support roughly grows as eps shrinks
            prev_support = static_cast<double>(rep.coefficients.support_size());
        }
    }

    SUBCASE("bounds contract along the iteration") {
        SparseSetParams params;
        const IndexSet deep_test = build_full_tensor_set(4, 4, op.test_counts());
        const SparseCoeffVector f_ref = assemble_rhs(s.problem, op, deep_test);
        const RhsProvider rhs(f_ref, 1e-10);
        const SolveReport rep = solve_adaptive(cop, rhs, 1e-2);
        REQUIRE(rep.converged);
        REQUIRE(rep.bound_history.size() >= 3);
        for (size_t i = 2; i < rep.bound_history.size(); ++i)
            CHECK(rep.bound_history[i] <= rep.bound_history[i - 1] * 1.1);
        CHECK(rep.bound_history.back() < rep.bound_history.front());
    }
}

TEST_CASE("half-line coercivity witness") {
    const Setup s;
    const TensorOperator op = s.make_op(3);

    SUBCASE("single coarse wavelet gives a positive ratio") {
        const CoercivityCheck c = verify_coercivity_halfline(op, 0.125, 1, 42, 0);
        CHECK(c.min_ratio > 0.0);
    }

    SUBCASE("random trial functions keep the ratio positive and window-stable") {
        const CoercivityCheck c = verify_coercivity_halfline(op, 0.125, 4, 77, 2);
        CHECK(c.min_ratio > 0.0);
        CHECK(c.window_sensitivity <= 0.2);
    }

    SUBCASE("alpha outside the admissible range is rejected") {
        CHECK_THROWS_AS(verify_coercivity_halfline(op, 0.3, 1, 1), std::invalid_argument);
    }
}
