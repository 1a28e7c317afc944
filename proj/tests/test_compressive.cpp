#include <cmath>
#include <random>

#include "doctest.h"
#include "pgst/compressive.hpp"

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

SparseCoeffVector random_vector_on(const IndexSet& set, std::mt19937_64& rng,
                                   double decay = 0.0) {
    std::normal_distribution<double> val(0.0, 1.0);
    SparseCoeffVector v;
    for (const auto& idx : set.members()) {
        const double scale =
            decay > 0.0 ? std::pow(2.0, -decay * (idx.time.level + idx.space_level_sum()))
                        : 1.0;
        v.set(idx, val(rng) * scale);
    }
    return v;
}

// exact B w (resp. B' w) over a full-tensor restriction of the capped universe
SparseCoeffVector exact_apply(const TensorOperator& op, const IndexSet& out_set,
                              const SparseCoeffVector& w, bool transpose) {
    SparseCoeffVector out;
    for (const auto& row : out_set.members()) {
        double acc = 0.0;
        for (const auto& [col, value] : w.entries())
            acc += (transpose ? op.entry(col, row) : op.entry(row, col)) * value;
        if (acc != 0.0) out.set(row, acc);
    }
    return out;
}

double diff_norm(const SparseCoeffVector& a, const SparseCoeffVector& b) {
    SparseCoeffVector d = a;
    d -= b;
    return d.l2_norm();
}

}  // namespace

TEST_CASE("compressed apply certification") {
    const Setup s;
    const TensorOperator op = s.make_op(4);
    const CompressedOperator cop(op, 3);
    SparseSetParams params;
    const IndexSet cols = build_sparse_set(3, 'B', params, op.trial_counts());
    const IndexSet full_rows = build_full_tensor_set(4, 4, op.test_counts());
    const IndexSet full_cols = build_full_tensor_set(4, 4, op.trial_counts());
    std::mt19937_64 rng(17001);

    SUBCASE("zero input") {
        const ApplyReport rep = cop.apply(SparseCoeffVector(), 1e-3);
        CHECK(rep.output.support_size() == 0);
        CHECK(rep.work == 0);
    }

    SUBCASE("huge tolerance admits the zero output") {
        SparseCoeffVector w = random_vector_on(cols, rng);
        const double eps = cop.norm_bound() * w.l2_norm() * 1.01;
        const ApplyReport rep = cop.apply(w, eps);
        CHECK(rep.output.support_size() == 0);
        const SparseCoeffVector exact = exact_apply(op, full_rows, w, false);
        CHECK(exact.l2_norm() <= eps);
    }

    SUBCASE("certified bound holds against the exact section product") {
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            SparseCoeffVector w = random_vector_on(cols, rng, 0.5);
            const ApplyReport rep = cop.apply(w, eps);
            const SparseCoeffVector exact = exact_apply(op, full_rows, w, false);
            CHECK(diff_norm(exact, rep.output) <= eps);
            CHECK(rep.certified_bound == eps);
        }
    }

    SUBCASE("transpose certification") {
        SparseSetParams p2;
        const IndexSet tcols = build_sparse_set(3, 'B', p2, op.test_counts());
        for (double eps : {1e-2, 1e-4}) {
            SparseCoeffVector w = random_vector_on(tcols, rng, 0.5);
            const ApplyReport rep = cop.apply_transpose(w, eps);
            const SparseCoeffVector exact = exact_apply(op, full_cols, w, true);
            CHECK(diff_norm(exact, rep.output) <= eps);
        }
    }

    SUBCASE("work is monotone in the tolerance") {
        SparseCoeffVector w = random_vector_on(cols, rng, 0.5);
        uint64_t prev = 0;
        for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
            const ApplyReport rep = cop.apply(w, eps);
            CHECK(rep.work >= prev);
            prev = rep.work;
        }
    }

    SUBCASE("normal-equation composition stays within budget") {
        SparseCoeffVector w = random_vector_on(cols, rng, 0.5);
        for (double eps : {1e-2, 1e-3}) {
            const ApplyReport rep = cop.apply_normal(w, eps);
            const SparseCoeffVector z1 = exact_apply(op, full_rows, w, false);
            const SparseCoeffVector z2 = exact_apply(op, full_cols, z1, true);
            CHECK(diff_norm(z2, rep.output) <= eps);
        }
        const ApplyReport zero = cop.apply_normal(SparseCoeffVector(), 1e-3);
        CHECK(zero.output.support_size() == 0);
    }
}

TEST_CASE("stage structure") {
    const Setup s;
    const TensorOperator op = s.make_op(4);
    const CompressedOperator cop(op, 3);

    SUBCASE("stage error bounds decrease to zero") {
        double prev = cop.norm_bound();
        for (int j = 0; j <= cop.full_gap(); ++j) {
            CHECK(cop.stage_error_bound(j) <= prev + 1e-15);
            prev = cop.stage_error_bound(j);
        }
        CHECK(cop.stage_error_bound(cop.full_gap()) == 0.0);
    }

    SUBCASE("stage zero touches only level-diagonal blocks") {
        SpaceTimeIndex col;
        col.dim = 1;
        col.time = WaveletIndex{2, 3};
        col.space[0] = WaveletIndex{1, 2};
        SparseCoeffVector out;
        uint64_t work = 0;
        cop.accumulate_stage(col, 1.0, 0, false, out, work);
        CHECK(out.support_size() > 0);
        for (const auto& [idx, v] : out.entries()) {
            CHECK(idx.time.level == col.time.level);
            CHECK(idx.space[0].level == col.space[0].level);
        }
    }

    SUBCASE("column counts grow like 2^j") {
        // recorded constant: stage column count / 2^j stays bounded
        double worst = 0.0;
        for (int j = 1; j <= 6; ++j) {
            const double c =
                static_cast<double>(cop.stage_max_col_nnz(j)) / std::pow(2.0, j);
            worst = std::max(worst, c);
        }
        CHECK(worst < 256.0);
    }
}

TEST_CASE("identity-like diagonal operator compresses at stage zero") {
    const Setup s;
    // hand-built identity factors: B = I (x) I + I (x) I = 2 I
    const int cap = 2;
    auto identity_factor = [&](FactorKind kind, const IntervalBasis& rows,
                               const IntervalBasis& cols) {
        FactorMatrix f(kind, cap, cap);
        for (int l = 0; l <= cap; ++l)
            for (int t = 0; t < std::min(rows.count(l), cols.count(l)); ++t)
                f.insert(WaveletIndex{l, t}, WaveletIndex{l, t}, 1.0);
        f.finalize();
        return f;
    };
    TensorOperator op(&s.trial, &s.test, {&s.space},
                      identity_factor(FactorKind::temporal_D, s.test, s.trial),
                      identity_factor(FactorKind::temporal_G, s.test, s.trial),
                      {identity_factor(FactorKind::spatial_M, s.space, s.space)},
                      {identity_factor(FactorKind::spatial_A, s.space, s.space)}, 0.0, 1);
    const CompressedOperator cop(op, 2, 1.0);
    CHECK(cop.stage_error_bound(0) <= 1e-12);
}

TEST_CASE("compressibility measurement") {
    const Setup s;
    const TensorOperator op = s.make_op(4);
    const auto rows = measure_sstar(op, 0, 7, 3);
    REQUIRE(rows.size() == 8);
    for (size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].error_norm <= rows[i - 1].error_norm + 1e-15);
        CHECK(rows[i].max_col_nnz >= rows[i - 1].max_col_nnz);
    }
    const double sbar = fitted_sstar(rows);
    CHECK(sbar >= 0.5);  // measured decay rate, recorded by the harness
}

TEST_CASE("rhs provider") {
    const Setup s;
    const TensorOperator op = s.make_op(4);
    SparseSetParams params;
    const IndexSet deep = build_sparse_set(4, 'B', params, op.test_counts());
    const SparseCoeffVector f_ref = assemble_rhs(s.problem, op, deep);
    const RhsProvider rhs(f_ref, 1e-9);

    SUBCASE("large tolerance yields the empty vector") {
        CHECK(rhs.get(f_ref.l2_norm() * 1.0001).support_size() == 0);
    }

    SUBCASE("below the floor is rejected by name") {
        try {
            (void)rhs.get(1e-12);
            CHECK(false);
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("floor") != std::string::npos);
        }
    }

    SUBCASE("support grows monotonically as eps shrinks") {
        size_t prev = 0;
        for (double eps : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4}) {
            const SparseCoeffVector v = rhs.get(eps);
            CHECK(v.support_size() >= prev);
            prev = v.support_size();
            SparseCoeffVector d = f_ref;
            d -= v;
            CHECK(d.l2_norm() <= eps);
        }
    }
}
