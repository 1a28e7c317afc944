#ifndef PGST_COMPRESSIVE_HPP
#define PGST_COMPRESSIVE_HPP

#include <cstdint>
#include <vector>

#include "pgst/assembly.hpp"
#include "pgst/tensor_index.hpp"

namespace pgst {

struct ApplyReport {
    SparseCoeffVector output;
    double certified_bound = 0.0;  // guaranteed l2 error of output vs B w
    size_t support_size = 0;
    uint64_t work = 0;  // matrix entries touched
};

// Compressed application of the scaled tensor operator. Stage j keeps the
// entries whose combined level gap  |time gap| + |space gap sum|  is at most
// j; each stage's column counts stay O(2^j) (measured and recorded) and the
// stage errors decay with j, which is the computability property the APPLY
// scheduling relies on.
class CompressedOperator {
  public:
    // stage_ref_level: sparse-set level of the reference section used to
    // estimate stage errors and the operator norm (cached at construction)
    CompressedOperator(const TensorOperator& op, int stage_ref_level = 4,
                       double safety = 2.0);

    const TensorOperator& op() const { return *op_; }
    int full_gap() const { return full_gap_; }
    double norm_bound() const { return norm_bound_; }
    double norm_estimate_raw() const { return norm_raw_; }  // before the safety factor
    double stage_error_bound(int j) const;
    size_t stage_max_col_nnz(int j) const;  // audit over the reference columns

    // apply one stage exactly to a single scaled input coefficient
    void accumulate_stage(const SpaceTimeIndex& col, double scaled_value, int stage,
                          bool transpose, SparseCoeffVector& raw_out,
                          uint64_t& work) const;

    ApplyReport apply(const SparseCoeffVector& w, double eps, bool transpose = false) const;
    ApplyReport apply_transpose(const SparseCoeffVector& w, double eps) const {
        return apply(w, eps, true);
    }
    // APPLY for B'B via the composition split eps/(2||B'||) + eps/2
    ApplyReport apply_normal(const SparseCoeffVector& w, double eps) const;

  private:
    const TensorOperator* op_;
    int full_gap_ = 0;
    double norm_bound_ = 0.0;
    double norm_raw_ = 0.0;
    std::vector<double> stage_errors_;  // bound on ||B - B_j||, index j
    IndexSet ref_rows_, ref_cols_;

    void estimate_stage_errors(int ref_level, double safety);
};

struct SstarRow {
    int stage = 0;
    size_t max_col_nnz = 0;
    double error_norm = 0.0;  // ||B - B_j|| estimate on the measurement section
};

// decay table of the compression stages on a reference section
std::vector<SstarRow> measure_sstar(const TensorOperator& op, int j_lo, int j_hi,
                                    int section_level);
// fitted decay rate: -slope of log(error) against log(column count)
double fitted_sstar(const std::vector<SstarRow>& rows);

// RHS routine backed by a deep-resolution reference vector: best-N truncation
// with ||f_ref - out|| <= eps and near-minimal support
class RhsProvider {
  public:
    RhsProvider(SparseCoeffVector reference, double resolution_floor);
    const SparseCoeffVector& reference() const { return reference_; }
    double floor() const { return floor_; }
    SparseCoeffVector get(double eps) const;

  private:
    SparseCoeffVector reference_;
    double floor_ = 0.0;
};

}  // namespace pgst

#endif
