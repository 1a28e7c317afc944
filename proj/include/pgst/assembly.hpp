#ifndef PGST_ASSEMBLY_HPP
#define PGST_ASSEMBLY_HPP

#include <array>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "pgst/interval_basis.hpp"
#include "pgst/linalg.hpp"
#include "pgst/tensor_index.hpp"

namespace pgst {

enum class FactorKind { temporal_D, temporal_G, spatial_M, spatial_A };

// Bi-level-block sparse matrix over wavelet indices of a (row basis, column
// basis) pair, stored per (row level, column level) block with both row and
// column adjacency. Entries are exact integrals.
class FactorMatrix {
  public:
    struct Entry {
        int pos;  // translation of the other side
        double value;
    };

    FactorMatrix() = default;
    FactorMatrix(FactorKind kind, int max_row_level, int max_col_level);

    FactorKind kind() const { return kind_; }
    int max_row_level() const { return max_row_level_; }
    int max_col_level() const { return max_col_level_; }

    void insert(WaveletIndex row, WaveletIndex col, double value);
    void finalize();  // sort adjacency, build column access

    double entry(WaveletIndex row, WaveletIndex col) const;
    // nonzeros of one row restricted to a column level (sorted by position)
    const std::vector<Entry>& row_entries(WaveletIndex row, int col_level) const;
    const std::vector<Entry>& col_entries(WaveletIndex col, int row_level) const;

    size_t nnz() const;
    // largest per-column count over all columns, restricted to blocks with
    // |row level - col level| <= gap (the compression audit)
    size_t max_col_nnz_within_gap(int gap) const;

  private:
    FactorKind kind_ = FactorKind::temporal_G;
    int max_row_level_ = 0;
    int max_col_level_ = 0;
    std::vector<int> row_counts_, col_counts_;
    // block index = rl * (max_col_level+1) + cl
    std::vector<std::vector<std::vector<Entry>>> by_row_;
    std::vector<std::vector<std::vector<Entry>>> by_col_;
    size_t block_id(int rl, int cl) const {
        return static_cast<size_t>(rl) * static_cast<size_t>(max_col_level_ + 1) +
               static_cast<size_t>(cl);
    }
};

// separable space-time function: sum of products g_r(t) * prod_i h_{r,i}(x_i)
struct SeparableFunction {
    struct Term {
        double coef = 1.0;
        std::function<double(double)> time;
        std::array<std::function<double(double)>, kMaxSpaceDim> space;
    };
    std::vector<Term> terms;
    int dim = 1;

    double operator()(double t, const std::array<double, kMaxSpaceDim>& x) const;
};

// parabolic model problem on (0,L_t) x (0,1)^n with homogeneous Dirichlet
// boundary conditions; coefficients are separable: a_i(x_i) per dimension
// plus a constant reaction coefficient
struct ProblemSpec {
    int dim = 1;
    double time_length = 8.0;
    std::array<std::function<double(double)>, kMaxSpaceDim> diffusion;  // a_i(x_i)
    double reaction = 0.0;                                              // c >= 0
    std::optional<SeparableFunction> solution;  // manufactured u*
    SeparableFunction rhs;                      // f (derived or raw)

    void validate() const;  // ellipticity on a sample grid
};

// the default manufactured problem: u* = t e^{-t} sin(pi x_1)...sin(pi x_n)
ProblemSpec manufactured_heat_problem(int dim, double time_length);

FactorMatrix assemble_temporal_D(const IntervalBasis& trial, const IntervalBasis& test,
                                 int level_cap);
FactorMatrix assemble_temporal_G(const IntervalBasis& trial, const IntervalBasis& test,
                                 int level_cap);
// mass and stiffness of one spatial dimension (L2-normalized basis; the
// Riesz scaling lives in the tensor weights)
std::pair<FactorMatrix, FactorMatrix> assemble_spatial(const ProblemSpec& problem,
                                                       const IntervalBasis& basis,
                                                       int dim_index, int level_cap);

// V-norms of the spatial basis functions, sqrt(a(sigma,sigma) + c-part),
// for the exact-norm weight comparison mode
std::vector<double> spatial_v_norms(const FactorMatrix& a_matrix,
                                    const IntervalBasis& basis, int level_cap);

// fractional-route recomputation of sampled temporal entries:
// max |D_exact - <D+ theta^X, D- theta^Y>| over sampled pairs
double verify_temporal_d_fractional(const FactorMatrix& d, const IntervalBasis& trial,
                                    const IntervalBasis& test, int max_level,
                                    int n_pairs, std::mt19937_64& rng,
                                    double quad_tol = 1e-9);

enum class WeightSide { trial_x, test_y };

// The full space-time operator D (x) M + G (x) A with diagonal Riesz scaling.
class TensorOperator {
  public:
    TensorOperator(const IntervalBasis* trial_t, const IntervalBasis* test_t,
                   std::vector<const IntervalBasis*> space, FactorMatrix d,
                   FactorMatrix g, std::vector<FactorMatrix> mass,
                   std::vector<FactorMatrix> stiff, double reaction, int m_order);

    int dim() const { return static_cast<int>(space_.size()); }
    int m_order() const { return m_order_; }
    double reaction_coef() const { return reaction_; }
    bool scaling_enabled() const { return scaled_; }
    void set_scaling(bool on) { scaled_ = on; }
    // exact-norm weights (comparison mode) instead of the dyadic formula
    void set_exact_norm_weights(bool on);

    const IntervalBasis& trial_time() const { return *trial_time_; }
    const IntervalBasis& test_time() const { return *test_time_; }
    const IntervalBasis& space_basis(int d) const { return *space_[static_cast<size_t>(d)]; }
    const FactorMatrix& factor_d() const { return d_; }
    const FactorMatrix& factor_g() const { return g_; }
    const FactorMatrix& factor_m(int d) const { return mass_[static_cast<size_t>(d)]; }
    const FactorMatrix& factor_a(int d) const { return stiff_[static_cast<size_t>(d)]; }
    int temporal_cap() const { return d_.max_col_level(); }
    int spatial_cap(int d) const { return mass_[static_cast<size_t>(d)].max_col_level(); }

    // weight law: sqrt(sum_i C_x,i 2^{2m|mu_i|} + C_t 2^{|lambda|}). The
    // constants calibrate the dyadic law to the exact level-0 norms of the
    // participating bases (C = 1 reproduces the unit-scale formula).
    void set_plain_dyadic_weights(bool on) { plain_weights_ = on; }
    double weight(WeightSide side, const SpaceTimeIndex& idx) const;
    // unscaled tensor entry and the scaled matrix entry (row in the test
    // universe, column in the trial universe)
    double entry_unscaled(const SpaceTimeIndex& row, const SpaceTimeIndex& col) const;
    double entry(const SpaceTimeIndex& row, const SpaceTimeIndex& col) const;

    // level caps of the index universe
    LevelCounts trial_counts() const;
    LevelCounts test_counts() const;

  private:
    const IntervalBasis* trial_time_;
    const IntervalBasis* test_time_;
    std::vector<const IntervalBasis*> space_;
    FactorMatrix d_, g_;
    std::vector<FactorMatrix> mass_, stiff_;
    double reaction_ = 0.0;
    int m_order_ = 1;
    bool scaled_ = true;
    bool exact_norm_weights_ = false;
    bool plain_weights_ = false;
    double weight_c_t_ = 1.0;                        // level-0 temporal calibration
    std::array<double, kMaxSpaceDim> weight_c_x_{};  // level-0 spatial calibration
    std::vector<std::vector<double>> v_norms_;       // per dim, per flat index
    std::vector<double> h12_norms_x_, h12_norms_y_;  // temporal, per flat index
    friend class SectionOperator;

    void calibrate_weights();
};

// Finite section of the scaled operator on level-block index sets, with a
// Kronecker-structured matrix-vector product (the full matrix is never
// materialized unless dense() is called).
class SectionOperator {
  public:
    SectionOperator(const TensorOperator& op, const IndexSet& rows, const IndexSet& cols);

    int n_rows() const { return static_cast<int>(rows_->size()); }
    int n_cols() const { return static_cast<int>(cols_->size()); }
    const IndexSet& rows() const { return *rows_; }
    const IndexSet& cols() const { return *cols_; }

    Vec apply(const Vec& x) const;            // S x
    Vec apply_transpose(const Vec& y) const;  // S' y
    Mat dense() const;

    // spectral quantities of the scaled section
    double norm_estimate(int iters = 60) const;          // sigma_max
    double smallest_singular_estimate(int outer = 30) const;  // sigma_min

  private:
    struct Block {
        int time_level;
        std::array<int, kMaxSpaceDim> space_levels;
        int offset;  // first flat position in the set
        int nt;      // time translations
        std::array<int, kMaxSpaceDim> nx;
        int nx_total;
    };
    const TensorOperator* op_;
    const IndexSet* rows_;
    const IndexSet* cols_;
    std::vector<Block> row_blocks_, col_blocks_;
    std::vector<double> row_weights_, col_weights_;
    bool generic_ = false;  // entry-wise fallback for non-block sets / dim > 1

    static std::optional<std::vector<Block>> try_group(const IndexSet& set, int dim);
    Vec apply_impl(const Vec& x, bool transpose) const;
};

// right-hand-side entries f(psi^Y)/w^Y over a test index set
SparseCoeffVector assemble_rhs(const ProblemSpec& problem, const TensorOperator& op,
                               const IndexSet& test_set, int quad_order = 8);

// dual-projection coefficients of a separable function onto the scaled trial
// basis over an index set (reference/truth vectors)
SparseCoeffVector project_to_trial(const SeparableFunction& u, const TensorOperator& op,
                                   const IndexSet& trial_set);

}  // namespace pgst

#endif
