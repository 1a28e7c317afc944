#include "pgst/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pgst/frac_calc.hpp"
#include "pgst/quadrature.hpp"

namespace pgst {

// --- FactorMatrix ------------------------------------------------------------

FactorMatrix::FactorMatrix(FactorKind kind, int max_row_level, int max_col_level)
    : kind_(kind), max_row_level_(max_row_level), max_col_level_(max_col_level) {
    by_row_.resize(static_cast<size_t>(max_row_level + 1) *
                   static_cast<size_t>(max_col_level + 1));
    by_col_.resize(by_row_.size());
}

void FactorMatrix::insert(WaveletIndex row, WaveletIndex col, double value) {
    if (value == 0.0) return;
    auto& rows = by_row_[block_id(row.level, col.level)];
    if (static_cast<size_t>(row.translation) >= rows.size())
        rows.resize(static_cast<size_t>(row.translation) + 1);
    rows[static_cast<size_t>(row.translation)].push_back(Entry{col.translation, value});
}

void FactorMatrix::finalize() {
    for (int rl = 0; rl <= max_row_level_; ++rl)
        for (int cl = 0; cl <= max_col_level_; ++cl) {
            auto& rows = by_row_[block_id(rl, cl)];
            auto& cols = by_col_[block_id(rl, cl)];
            cols.clear();
            for (auto& r : rows)
                std::sort(r.begin(), r.end(),
                          [](const Entry& a, const Entry& b) { return a.pos < b.pos; });
            for (size_t r = 0; r < rows.size(); ++r)
                for (const Entry& e : rows[r]) {
                    if (static_cast<size_t>(e.pos) >= cols.size())
                        cols.resize(static_cast<size_t>(e.pos) + 1);
                    cols[static_cast<size_t>(e.pos)].push_back(
                        Entry{static_cast<int>(r), e.value});
                }
            for (auto& c : cols)
                std::sort(c.begin(), c.end(),
                          [](const Entry& a, const Entry& b) { return a.pos < b.pos; });
        }
}

namespace {
const std::vector<FactorMatrix::Entry> kEmptyEntries;
}

double FactorMatrix::entry(WaveletIndex row, WaveletIndex col) const {
    if (row.level > max_row_level_ || col.level > max_col_level_) return 0.0;
    const auto& rows = by_row_[block_id(row.level, col.level)];
    if (static_cast<size_t>(row.translation) >= rows.size()) return 0.0;
    const auto& r = rows[static_cast<size_t>(row.translation)];
    auto it = std::lower_bound(r.begin(), r.end(), col.translation,
                               [](const Entry& e, int pos) { return e.pos < pos; });
    if (it == r.end() || it->pos != col.translation) return 0.0;
    return it->value;
}

const std::vector<FactorMatrix::Entry>& FactorMatrix::row_entries(WaveletIndex row,
                                                                  int col_level) const {
    if (row.level > max_row_level_ || col_level > max_col_level_) return kEmptyEntries;
    const auto& rows = by_row_[block_id(row.level, col_level)];
    if (static_cast<size_t>(row.translation) >= rows.size()) return kEmptyEntries;
    return rows[static_cast<size_t>(row.translation)];
}

const std::vector<FactorMatrix::Entry>& FactorMatrix::col_entries(WaveletIndex col,
                                                                  int row_level) const {
    if (col.level > max_col_level_ || row_level > max_row_level_) return kEmptyEntries;
    const auto& cols = by_col_[block_id(row_level, col.level)];
    if (static_cast<size_t>(col.translation) >= cols.size()) return kEmptyEntries;
    return cols[static_cast<size_t>(col.translation)];
}

size_t FactorMatrix::nnz() const {
    size_t n = 0;
    for (const auto& rows : by_row_)
        for (const auto& r : rows) n += r.size();
    return n;
}

size_t FactorMatrix::max_col_nnz_within_gap(int gap) const {
    size_t worst = 0;
    for (int cl = 0; cl <= max_col_level_; ++cl) {
        std::vector<size_t> counts;
        for (int rl = 0; rl <= max_row_level_; ++rl) {
            if (std::abs(rl - cl) > gap) continue;
            const auto& cols = by_col_[block_id(rl, cl)];
            if (cols.size() > counts.size()) counts.resize(cols.size(), 0);
            for (size_t c = 0; c < cols.size(); ++c) counts[c] += cols[c].size();
        }
        for (size_t c : counts) worst = std::max(worst, c);
    }
    return worst;
}

// --- problem description -----------------------------------------------------

double SeparableFunction::operator()(double t,
                                     const std::array<double, kMaxSpaceDim>& x) const {
    double s = 0.0;
    for (const auto& term : terms) {
        double v = term.coef * term.time(t);
        for (int d = 0; d < dim; ++d) v *= term.space[static_cast<size_t>(d)](x[static_cast<size_t>(d)]);
        s += v;
    }
    return s;
}

void ProblemSpec::validate() const {
    if (dim < 1 || dim > kMaxSpaceDim)
        throw std::invalid_argument("ProblemSpec: bad spatial dimension");
    if (reaction < 0.0) throw std::invalid_argument("ProblemSpec: reaction must be >= 0");
    for (int d = 0; d < dim; ++d) {
        const auto& a = diffusion[static_cast<size_t>(d)];
        if (!a) throw std::invalid_argument("ProblemSpec: missing diffusion coefficient");
        for (int i = 0; i <= 256; ++i) {
            const double x = static_cast<double>(i) / 256.0;
            if (!(a(x) > 0.0)) {
                std::ostringstream os;
                os << "ProblemSpec: ellipticity violated, a_" << d << "(" << x
                   << ") = " << a(x) << " is not positive";
                throw std::invalid_argument(os.str());
            }
        }
    }
}

ProblemSpec manufactured_heat_problem(int dim, double time_length) {
    ProblemSpec p;
    p.dim = dim;
    p.time_length = time_length;
    for (int d = 0; d < dim; ++d)
        p.diffusion[static_cast<size_t>(d)] = [](double) { return 1.0; };
    p.reaction = 0.0;

    auto sine = [](double x) { return std::sin(std::numbers::pi * x); };
    SeparableFunction u;
    u.dim = dim;
    SeparableFunction::Term ut;
    ut.coef = 1.0;
    ut.time = [](double t) { return t * std::exp(-t); };
    for (int d = 0; d < dim; ++d) ut.space[static_cast<size_t>(d)] = sine;
    u.terms.push_back(ut);
    p.solution = u;

    // f = u_t - sum_i u_{x_i x_i} with a == 1
    SeparableFunction f;
    f.dim = dim;
    SeparableFunction::Term f1 = ut;
    f1.time = [](double t) { return (1.0 - t) * std::exp(-t); };
    f.terms.push_back(f1);
    SeparableFunction::Term f2 = ut;
    f2.coef = static_cast<double>(dim) * std::numbers::pi * std::numbers::pi;
    f.terms.push_back(f2);
    p.rhs = f;
    return p;
}

// --- factor assembly ----------------------------------------------------------

namespace {

bool supports_overlap(const PiecewisePoly& a, const PiecewisePoly& b) {
    return a.support_left() < b.support_right() && b.support_left() < a.support_right();
}

}  // namespace

FactorMatrix assemble_temporal_D(const IntervalBasis& trial, const IntervalBasis& test,
                                 int level_cap) {
    if (trial.flavor() != BasisFlavor::temporal_trial)
        throw std::invalid_argument("assemble_temporal_D: trial flavor mismatch");
    if (test.flavor() != BasisFlavor::temporal_test)
        throw std::invalid_argument("assemble_temporal_D: test flavor mismatch");
    const int cap = std::min({level_cap, trial.max_level(), test.max_level()});
    FactorMatrix out(FactorKind::temporal_D, cap, cap);
    for (int cl = 0; cl <= cap; ++cl) {
        std::vector<PiecewisePoly> dtrial(static_cast<size_t>(trial.count(cl)));
        for (int tc = 0; tc < trial.count(cl); ++tc)
            dtrial[static_cast<size_t>(tc)] = trial.eval(WaveletIndex{cl, tc}).derivative();
        for (int rl = 0; rl <= cap; ++rl)
            for (int tr = 0; tr < test.count(rl); ++tr) {
                const PiecewisePoly& row_fn = test.eval(WaveletIndex{rl, tr});
                for (int tc = 0; tc < trial.count(cl); ++tc) {
                    if (!supports_overlap(dtrial[static_cast<size_t>(tc)], row_fn)) continue;
                    const double v = dtrial[static_cast<size_t>(tc)].inner_product(row_fn);
                    out.insert(WaveletIndex{rl, tr}, WaveletIndex{cl, tc}, v);
                }
            }
    }
    out.finalize();
    return out;
}

FactorMatrix assemble_temporal_G(const IntervalBasis& trial, const IntervalBasis& test,
                                 int level_cap) {
    if (trial.flavor() != BasisFlavor::temporal_trial)
        throw std::invalid_argument("assemble_temporal_G: trial flavor mismatch");
    if (test.flavor() != BasisFlavor::temporal_test)
        throw std::invalid_argument("assemble_temporal_G: test flavor mismatch");
    const int cap = std::min({level_cap, trial.max_level(), test.max_level()});
    FactorMatrix out(FactorKind::temporal_G, cap, cap);
    for (int rl = 0; rl <= cap; ++rl)
        for (int tr = 0; tr < test.count(rl); ++tr) {
            const PiecewisePoly& row_fn = test.eval(WaveletIndex{rl, tr});
            for (int cl = 0; cl <= cap; ++cl)
                for (int tc = 0; tc < trial.count(cl); ++tc) {
                    const PiecewisePoly& col_fn = trial.eval(WaveletIndex{cl, tc});
                    if (!supports_overlap(col_fn, row_fn)) continue;
                    out.insert(WaveletIndex{rl, tr}, WaveletIndex{cl, tc},
                               col_fn.inner_product(row_fn));
                }
        }
    out.finalize();
    return out;
}

std::pair<FactorMatrix, FactorMatrix> assemble_spatial(const ProblemSpec& problem,
                                                       const IntervalBasis& basis,
                                                       int dim_index, int level_cap) {
    problem.validate();
    if (basis.flavor() != BasisFlavor::spatial_dirichlet)
        throw std::invalid_argument("assemble_spatial: basis flavor mismatch");
    const int cap = std::min(level_cap, basis.max_level());
    const auto& a = problem.diffusion[static_cast<size_t>(dim_index)];
    FactorMatrix mass(FactorKind::spatial_M, cap, cap);
    FactorMatrix stiff(FactorKind::spatial_A, cap, cap);
    for (int rl = 0; rl <= cap; ++rl)
        for (int tr = 0; tr < basis.count(rl); ++tr) {
            const WaveletIndex row{rl, tr};
            const PiecewisePoly& row_fn = basis.eval(row);
            const PiecewisePoly row_d = row_fn.derivative();
            for (int cl = 0; cl <= cap; ++cl)
                for (int tc = 0; tc < basis.count(cl); ++tc) {
                    const WaveletIndex col{cl, tc};
                    // symmetry: compute the lower triangle by level-major order
                    if (cl > rl || (cl == rl && tc > tr)) continue;
                    const PiecewisePoly& col_fn = basis.eval(col);
                    if (!supports_overlap(col_fn, row_fn)) continue;
                    const double mv = col_fn.inner_product(row_fn);
                    const PiecewisePoly col_d = col_fn.derivative();
                    // weighted stiffness by per-cell Gauss on the merged grid
                    double av = 0.0;
                    {
                        const double lo =
                            std::max(row_fn.support_left(), col_fn.support_left());
                        const double hi =
                            std::min(row_fn.support_right(), col_fn.support_right());
                        std::vector<double> cuts{lo, hi};
                        for (double x : row_fn.breakpoints())
                            if (x > lo && x < hi) cuts.push_back(x);
                        for (double x : col_fn.breakpoints())
                            if (x > lo && x < hi) cuts.push_back(x);
                        std::sort(cuts.begin(), cuts.end());
                        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
                        av = gauss_integrate_panels(
                            [&](double x) {
                                return a(x) * row_d(x) * col_d(x);
                            },
                            cuts, 8);
                    }
                    if (mv != 0.0) {
                        mass.insert(row, col, mv);
                        if (!(row == col)) mass.insert(col, row, mv);
                    }
                    if (av != 0.0) {
                        stiff.insert(row, col, av);
                        if (!(row == col)) stiff.insert(col, row, av);
                    }
                }
        }
    mass.finalize();
    stiff.finalize();
    return {std::move(mass), std::move(stiff)};
}

std::vector<double> spatial_v_norms(const FactorMatrix& a_matrix,
                                    const IntervalBasis& basis, int level_cap) {
    std::vector<double> out;
    for (int l = 0; l <= level_cap; ++l)
        for (int t = 0; t < basis.count(l); ++t)
            out.push_back(std::sqrt(a_matrix.entry(WaveletIndex{l, t}, WaveletIndex{l, t})));
    return out;
}

double verify_temporal_d_fractional(const FactorMatrix& d, const IntervalBasis& trial,
                                    const IntervalBasis& test, int max_level, int n_pairs,
                                    std::mt19937_64& rng, double quad_tol) {
    const int cap = std::min({max_level, d.max_row_level(), d.max_col_level()});
    std::uniform_int_distribution<int> lv(0, cap);
    double worst = 0.0;
    for (int rep = 0; rep < n_pairs; ++rep) {
        const int cl = lv(rng), rl = lv(rng);
        std::uniform_int_distribution<int> tc(0, trial.count(cl) - 1);
        std::uniform_int_distribution<int> tr(0, test.count(rl) - 1);
        const WaveletIndex col{cl, tc(rng)}, row{rl, tr(rng)};
        const PiecewisePoly& w = trial.eval(col);
        const PiecewisePoly& v = test.eval(row);
        const PiecewisePoly dw = w.derivative();
        const PiecewisePoly dv = v.derivative();
        const double lo = w.support_left();
        const double hi = v.support_right();
        double frac = 0.0;
        if (lo < hi) {
            std::vector<double> cuts{lo, hi};
            for (double x : w.breakpoints())
                if (x > lo && x < hi) cuts.push_back(x);
            for (double x : v.breakpoints())
                if (x > lo && x < hi) cuts.push_back(x);
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            auto integrand = [&](double t) {
                const double dplus = frac_integral_plus(dw, 0.5, t);
                const double dminus = -frac_integral_minus(dv, 0.5, t);
                return dplus * dminus;
            };
            frac = adaptive_integrate_breakpoints(integrand, cuts, quad_tol);
        }
        worst = std::max(worst, std::abs(frac - d.entry(row, col)));
    }
    return worst;
}

// --- tensor operator -----------------------------------------------------------

TensorOperator::TensorOperator(const IntervalBasis* trial_t, const IntervalBasis* test_t,
                               std::vector<const IntervalBasis*> space, FactorMatrix d,
                               FactorMatrix g, std::vector<FactorMatrix> mass,
                               std::vector<FactorMatrix> stiff, double reaction,
                               int m_order)
    : trial_time_(trial_t),
      test_time_(test_t),
      space_(std::move(space)),
      d_(std::move(d)),
      g_(std::move(g)),
      mass_(std::move(mass)),
      stiff_(std::move(stiff)),
      reaction_(reaction),
      m_order_(m_order) {
    if (space_.empty() || space_.size() != mass_.size() || mass_.size() != stiff_.size())
        throw std::invalid_argument("TensorOperator: factor/basis mismatch");
    calibrate_weights();
}

void TensorOperator::calibrate_weights() {
    // match the dyadic law to the exact level-0 norms so the scaling is
    // unit-independent: C_x = median level-0 diagonal of A (+ reaction),
    // C_t = median level-0 value of 1 + || D^{1/2}_+ theta ||^2 on the window
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v.empty() ? 1.0 : v[v.size() / 2];
    };
    for (size_t d = 0; d < space_.size(); ++d) {
        std::vector<double> diag;
        for (int t = 0; t < space_[d]->count(0); ++t)
            diag.push_back(stiff_[d].entry(WaveletIndex{0, t}, WaveletIndex{0, t}) +
                           reaction_);
        weight_c_x_[d] = median(diag);
    }
    std::vector<double> tvals;
    for (int t = 0; t < trial_time_->count(0); ++t) {
        const PiecewisePoly& th = trial_time_->eval(WaveletIndex{0, t});
        const PiecewisePoly dth = th.derivative();
        auto sq = [&](double s) {
            const double v = frac_integral_plus(dth, 0.5, s);
            return v * v;
        };
        std::vector<double> cuts = th.breakpoints();
        if (cuts.front() > 0.0) cuts.insert(cuts.begin(), 0.0);
        if (cuts.back() < trial_time_->length()) cuts.push_back(trial_time_->length());
        tvals.push_back(1.0 + adaptive_integrate_breakpoints(sq, cuts, 1e-8));
    }
    weight_c_t_ = median(tvals);
}

void TensorOperator::set_exact_norm_weights(bool on) {
    exact_norm_weights_ = on;
    if (!on) return;
    if (!v_norms_.empty()) return;
    v_norms_.resize(space_.size());
    for (size_t d = 0; d < space_.size(); ++d)
        v_norms_[d] = spatial_v_norms(stiff_[d], *space_[d], stiff_[d].max_col_level());
    // temporal half-order norms via the derivative route on the window
    auto temporal_norms = [&](const IntervalBasis& b, int cap, bool plus) {
        std::vector<double> out;
        for (int l = 0; l <= cap; ++l)
            for (int t = 0; t < b.count(l); ++t) {
                const PiecewisePoly& th = b.eval(WaveletIndex{l, t});
                const PiecewisePoly dth = th.derivative();
                auto sq = [&](double s) {
                    const double v = plus ? frac_integral_plus(dth, 0.5, s)
                                          : -frac_integral_minus(dth, 0.5, s);
                    return v * v;
                };
                std::vector<double> cuts = th.breakpoints();
                if (cuts.front() > 0.0) cuts.insert(cuts.begin(), 0.0);
                if (cuts.back() < b.length()) cuts.push_back(b.length());
                const double dsq = adaptive_integrate_breakpoints(sq, cuts, 1e-9);
                out.push_back(std::sqrt(1.0 + dsq));  // L2 norm is 1
            }
        return out;
    };
    h12_norms_x_ = temporal_norms(*trial_time_, d_.max_col_level(), true);
    h12_norms_y_ = temporal_norms(*test_time_, d_.max_row_level(), false);
}

double TensorOperator::weight(WeightSide side, const SpaceTimeIndex& idx) const {
    if (!scaled_) return 1.0;
    if (exact_norm_weights_) {
        double sum = 0.0;
        for (int d = 0; d < idx.dim; ++d) {
            const double vn = v_norms_[static_cast<size_t>(d)][static_cast<size_t>(
                space_[static_cast<size_t>(d)]->flat_index(idx.space[static_cast<size_t>(d)]))];
            sum += vn * vn;
        }
        const double h12 =
            side == WeightSide::trial_x
                ? h12_norms_x_[static_cast<size_t>(trial_time_->flat_index(idx.time))]
                : h12_norms_y_[static_cast<size_t>(test_time_->flat_index(idx.time))];
        return std::sqrt(sum + h12 * h12);
    }
    const double ct = plain_weights_ ? 1.0 : weight_c_t_;
    double sum = ct * std::pow(2.0, static_cast<double>(idx.time.level));
    for (int d = 0; d < idx.dim; ++d) {
        const double cx = plain_weights_ ? 1.0 : weight_c_x_[static_cast<size_t>(d)];
        sum += cx * std::pow(2.0, 2.0 * m_order_ * idx.space[static_cast<size_t>(d)].level);
    }
    return std::sqrt(sum);
}

double TensorOperator::entry_unscaled(const SpaceTimeIndex& row,
                                      const SpaceTimeIndex& col) const {
    const double dv = d_.entry(row.time, col.time);
    const double gv = g_.entry(row.time, col.time);
    if (dv == 0.0 && gv == 0.0) return 0.0;
    double mass_prod = 1.0;
    std::array<double, kMaxSpaceDim> mvals{};
    for (int d = 0; d < row.dim; ++d) {
        mvals[static_cast<size_t>(d)] = mass_[static_cast<size_t>(d)].entry(
            row.space[static_cast<size_t>(d)], col.space[static_cast<size_t>(d)]);
        mass_prod *= mvals[static_cast<size_t>(d)];
    }
    double a_tensor = reaction_ * mass_prod;
    for (int d = 0; d < row.dim; ++d) {
        double term = stiff_[static_cast<size_t>(d)].entry(row.space[static_cast<size_t>(d)],
                                                           col.space[static_cast<size_t>(d)]);
        if (term == 0.0) continue;
        for (int j = 0; j < row.dim; ++j)
            if (j != d) term *= mvals[static_cast<size_t>(j)];
        a_tensor += term;
    }
    return dv * mass_prod + gv * a_tensor;
}

double TensorOperator::entry(const SpaceTimeIndex& row, const SpaceTimeIndex& col) const {
    const double raw = entry_unscaled(row, col);
    if (raw == 0.0 || !scaled_) return raw;
    return raw / (weight(WeightSide::test_y, row) * weight(WeightSide::trial_x, col));
}

LevelCounts TensorOperator::trial_counts() const {
    LevelCounts c;
    c.dim = dim();
    for (int l = 0; l <= d_.max_col_level(); ++l) c.time.push_back(trial_time_->count(l));
    for (int d = 0; d < dim(); ++d)
        for (int l = 0; l <= mass_[static_cast<size_t>(d)].max_col_level(); ++l)
            c.space[static_cast<size_t>(d)].push_back(space_[static_cast<size_t>(d)]->count(l));
    return c;
}

LevelCounts TensorOperator::test_counts() const {
    LevelCounts c;
    c.dim = dim();
    for (int l = 0; l <= d_.max_row_level(); ++l) c.time.push_back(test_time_->count(l));
    for (int d = 0; d < dim(); ++d)
        for (int l = 0; l <= mass_[static_cast<size_t>(d)].max_row_level(); ++l)
            c.space[static_cast<size_t>(d)].push_back(space_[static_cast<size_t>(d)]->count(l));
    return c;
}

// --- sections -------------------------------------------------------------------

std::optional<std::vector<SectionOperator::Block>> SectionOperator::try_group(
    const IndexSet& set, int dim) {
    std::vector<Block> blocks;
    size_t i = 0;
    while (i < set.size()) {
        const SpaceTimeIndex& first = set[i];
        Block b;
        b.time_level = first.time.level;
        for (int d = 0; d < dim; ++d)
            b.space_levels[static_cast<size_t>(d)] = first.space[static_cast<size_t>(d)].level;
        b.offset = static_cast<int>(i);
        size_t j = i;
        while (j < set.size()) {
            const SpaceTimeIndex& cur = set[j];
            bool same = cur.time.level == b.time_level;
            for (int d = 0; d < dim && same; ++d)
                same = cur.space[static_cast<size_t>(d)].level ==
                       b.space_levels[static_cast<size_t>(d)];
            if (!same) break;
            ++j;
        }
        // reconstruct the block extents from the last member
        const SpaceTimeIndex& last = set[j - 1];
        b.nt = last.time.translation + 1;
        b.nx_total = 1;
        for (int d = 0; d < dim; ++d) {
            b.nx[static_cast<size_t>(d)] = last.space[static_cast<size_t>(d)].translation + 1;
            b.nx_total *= b.nx[static_cast<size_t>(d)];
        }
        if (static_cast<size_t>(b.nt) * static_cast<size_t>(b.nx_total) != j - i)
            return std::nullopt;  // not a full level block
        blocks.push_back(b);
        i = j;
    }
    return blocks;
}

SectionOperator::SectionOperator(const TensorOperator& op, const IndexSet& rows,
                                 const IndexSet& cols)
    : op_(&op), rows_(&rows), cols_(&cols) {
    auto rb = try_group(rows, op.dim());
    auto cb = try_group(cols, op.dim());
    if (rb && cb && op.dim() == 1) {
        row_blocks_ = std::move(*rb);
        col_blocks_ = std::move(*cb);
    } else {
        generic_ = true;  // adaptive sets: entry-wise application
    }
    row_weights_.resize(rows.size());
    col_weights_.resize(cols.size());
    for (size_t i = 0; i < rows.size(); ++i)
        row_weights_[i] = op.weight(WeightSide::test_y, rows[i]);
    for (size_t i = 0; i < cols.size(); ++i)
        col_weights_[i] = op.weight(WeightSide::trial_x, cols[i]);
}

Vec SectionOperator::apply(const Vec& x) const { return apply_impl(x, false); }
Vec SectionOperator::apply_transpose(const Vec& y) const { return apply_impl(y, true); }

Vec SectionOperator::apply_impl(const Vec& x, bool transpose) const {
    const auto& in_blocks = transpose ? row_blocks_ : col_blocks_;
    const auto& out_blocks = transpose ? col_blocks_ : row_blocks_;
    const auto& in_weights = transpose ? row_weights_ : col_weights_;
    const auto& out_weights = transpose ? col_weights_ : row_weights_;
    if (x.size() != static_cast<long>(in_weights.size()))
        throw std::invalid_argument("SectionOperator::apply: size mismatch");

    Vec xs(x.size());
    for (long i = 0; i < x.size(); ++i)
        xs(i) = op_->scaling_enabled() ? x(i) / in_weights[static_cast<size_t>(i)] : x(i);
    Vec out = Vec::Zero(static_cast<long>(out_weights.size()));

    if (generic_) {
        for (long oi = 0; oi < out.size(); ++oi) {
            const SpaceTimeIndex& orow = transpose ? (*cols_)[static_cast<size_t>(oi)]
                                                   : (*rows_)[static_cast<size_t>(oi)];
            double acc = 0.0;
            for (long ci = 0; ci < xs.size(); ++ci) {
                const SpaceTimeIndex& ocol = transpose ? (*rows_)[static_cast<size_t>(ci)]
                                                       : (*cols_)[static_cast<size_t>(ci)];
                const double v = transpose ? op_->entry_unscaled(ocol, orow)
                                           : op_->entry_unscaled(orow, ocol);
                acc += v * xs(ci);
            }
            out(oi) = acc;
        }
        for (long i = 0; i < out.size(); ++i)
            if (op_->scaling_enabled()) out(i) /= out_weights[static_cast<size_t>(i)];
        return out;
    }

    if (op_->dim() == 1) {
        const FactorMatrix& fd = op_->factor_d();
        const FactorMatrix& fg = op_->factor_g();
        const FactorMatrix& fm = op_->factor_m(0);
        const FactorMatrix& fa = op_->factor_a(0);
        const double c = op_->reaction_;
        for (const Block& ob : out_blocks) {
            for (const Block& ib : in_blocks) {
                // temporal factor times X, then spatial factor transpose
                // out(i,r) += T(i,j) X(j,s) S(r,s)
                auto accumulate = [&](const FactorMatrix& tfac, const FactorMatrix& sfac,
                                      double coef, bool add_reaction_mass) {
                    // rows of tfac: test level; cols: trial level
                    // t1 = T X  (nt_out x nx_in)
                    Mat t1 = Mat::Zero(ob.nt, ib.nx[0]);
                    for (int i = 0; i < ob.nt; ++i) {
                        const auto& tr = transpose
                                             ? tfac.col_entries(WaveletIndex{ob.time_level, i},
                                                                ib.time_level)
                                             : tfac.row_entries(WaveletIndex{ob.time_level, i},
                                                                ib.time_level);
                        for (const auto& e : tr) {
                            const double tv = e.value;
                            const long base = ib.offset + e.pos * ib.nx[0];
                            for (int s = 0; s < ib.nx[0]; ++s)
                                t1(i, s) += tv * xs(base + s);
                        }
                    }
                    // out(i, r) += coef * t1(i, s) * Sfac(r, s) [+ c * M(r,s)]
                    for (int r = 0; r < ob.nx[0]; ++r) {
                        const auto& sr = transpose
                                             ? sfac.col_entries(WaveletIndex{ob.space_levels[0], r},
                                                                ib.space_levels[0])
                                             : sfac.row_entries(WaveletIndex{ob.space_levels[0], r},
                                                                ib.space_levels[0]);
                        for (const auto& e : sr) {
                            const double sv = coef * e.value;
                            for (int i = 0; i < ob.nt; ++i)
                                out(ob.offset + i * ob.nx[0] + r) += sv * t1(i, e.pos);
                        }
                        if (add_reaction_mass && c != 0.0) {
                            const auto& mr =
                                transpose ? fm.col_entries(WaveletIndex{ob.space_levels[0], r},
                                                           ib.space_levels[0])
                                          : fm.row_entries(WaveletIndex{ob.space_levels[0], r},
                                                           ib.space_levels[0]);
                            for (const auto& e : mr) {
                                const double sv = c * e.value;
                                for (int i = 0; i < ob.nt; ++i)
                                    out(ob.offset + i * ob.nx[0] + r) += sv * t1(i, e.pos);
                            }
                        }
                    }
                };
                accumulate(fd, fm, 1.0, false);
                accumulate(fg, fa, 1.0, true);
            }
        }
    }

    for (long i = 0; i < out.size(); ++i)
        if (op_->scaling_enabled()) out(i) /= out_weights[static_cast<size_t>(i)];
    return out;
}

Mat SectionOperator::dense() const {
    Mat s(n_rows(), n_cols());
    for (int i = 0; i < n_rows(); ++i)
        for (int j = 0; j < n_cols(); ++j)
            s(i, j) = op_->entry((*rows_)[static_cast<size_t>(i)], (*cols_)[static_cast<size_t>(j)]);
    return s;
}

double SectionOperator::norm_estimate(int iters) const {
    return power_iteration_norm([this](const Vec& v) { return apply(v); },
                                [this](const Vec& v) { return apply_transpose(v); },
                                n_cols(), iters);
}

double SectionOperator::smallest_singular_estimate(int outer) const {
    const double smax = norm_estimate();
    const double lam = smallest_eigenvalue_spd(
        [this](const Vec& v) { return apply_transpose(apply(v)); }, n_cols(), smax * smax,
        outer);
    return std::sqrt(std::max(0.0, lam));
}

// --- right-hand sides -----------------------------------------------------------

namespace {

// \int g * theta over the support of theta, per-cell Gauss
double weighted_basis_integral(const std::function<double(double)>& g,
                               const PiecewisePoly& theta, int order) {
    return gauss_integrate_panels([&](double t) { return g(t) * theta(t); },
                                  theta.breakpoints(), order);
}

}  // namespace

SparseCoeffVector assemble_rhs(const ProblemSpec& problem, const TensorOperator& op,
                               const IndexSet& test_set, int quad_order) {
    const auto& f = problem.rhs;
    if (f.terms.empty()) return SparseCoeffVector();
    if (f.dim != op.dim())
        throw std::invalid_argument("assemble_rhs: dimension mismatch");
    // per-term 1d moments over the temporal test basis and each spatial basis
    const int tcap = op.factor_d().max_row_level();
    std::vector<std::vector<double>> tmom(f.terms.size());
    std::vector<std::array<std::vector<double>, kMaxSpaceDim>> xmom(f.terms.size());
    for (size_t r = 0; r < f.terms.size(); ++r) {
        const auto& term = f.terms[r];
        for (int l = 0; l <= tcap; ++l)
            for (int t = 0; t < op.test_time().count(l); ++t)
                tmom[r].push_back(weighted_basis_integral(
                    term.time, op.test_time().eval(WaveletIndex{l, t}), quad_order));
        for (int d = 0; d < op.dim(); ++d) {
            const int xcap = op.factor_m(d).max_row_level();
            for (int l = 0; l <= xcap; ++l)
                for (int t = 0; t < op.space_basis(d).count(l); ++t)
                    xmom[r][static_cast<size_t>(d)].push_back(weighted_basis_integral(
                        term.space[static_cast<size_t>(d)],
                        op.space_basis(d).eval(WaveletIndex{l, t}), quad_order));
        }
    }
    SparseCoeffVector out;
    for (const auto& idx : test_set.members()) {
        double v = 0.0;
        for (size_t r = 0; r < f.terms.size(); ++r) {
            double term = f.terms[r].coef *
                          tmom[r][static_cast<size_t>(op.test_time().flat_index(idx.time))];
            for (int d = 0; d < op.dim(); ++d)
                term *= xmom[r][static_cast<size_t>(d)][static_cast<size_t>(
                    op.space_basis(d).flat_index(idx.space[static_cast<size_t>(d)]))];
            v += term;
        }
        if (v != 0.0) out.set(idx, v / op.weight(WeightSide::test_y, idx));
    }
    return out;
}

SparseCoeffVector project_to_trial(const SeparableFunction& u, const TensorOperator& op,
                                   const IndexSet& trial_set) {
    if (u.dim != op.dim())
        throw std::invalid_argument("project_to_trial: dimension mismatch");
    const int tcap = op.factor_d().max_col_level();
    std::vector<std::vector<double>> tc(u.terms.size());
    std::vector<std::array<std::vector<double>, kMaxSpaceDim>> xc(u.terms.size());
    for (size_t r = 0; r < u.terms.size(); ++r) {
        tc[r] = op.trial_time().dual_project(tcap, u.terms[r].time);
        for (int d = 0; d < op.dim(); ++d)
            xc[r][static_cast<size_t>(d)] = op.space_basis(d).dual_project(
                op.factor_m(d).max_col_level(), u.terms[r].space[static_cast<size_t>(d)]);
    }
    SparseCoeffVector out;
    for (const auto& idx : trial_set.members()) {
        double v = 0.0;
        for (size_t r = 0; r < u.terms.size(); ++r) {
            double term = u.terms[r].coef *
                          tc[r][static_cast<size_t>(op.trial_time().flat_index(idx.time))];
            for (int d = 0; d < op.dim(); ++d)
                term *= xc[r][static_cast<size_t>(d)][static_cast<size_t>(
                    op.space_basis(d).flat_index(idx.space[static_cast<size_t>(d)]))];
            v += term;
        }
        // coefficients of the weighted basis carry the weight
        if (v != 0.0) out.set(idx, v * op.weight(WeightSide::trial_x, idx));
    }
    return out;
}

}  // namespace pgst
