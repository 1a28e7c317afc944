#ifndef PGST_INTERVAL_BASIS_HPP
#define PGST_INTERVAL_BASIS_HPP

#include <array>
#include <compare>
#include <functional>
#include <vector>

#include "pgst/piecewise_poly.hpp"

namespace pgst {

struct WaveletIndex {
    int level = 0;        // 0 addresses the coarse scaling block
    int translation = 0;  // position within the level
    auto operator<=>(const WaveletIndex&) const = default;
};

enum class BasisFlavor {
    temporal_trial,    // vanishes at t = 0 (and at the horizon)
    temporal_test,     // free at t = 0, vanishes at the horizon
    spatial_dirichlet  // vanishes at both endpoints
};

// Boundary-adapted biorthogonal spline wavelet basis on [0, L], order
// d = d~ = 2: piecewise-linear interior wavelets with two vanishing moments
// (the lifted (2,2) construction), boundary wavelets re-lifted onto the
// nearest admissible coarse hats so the moment conditions persist.
//
// Level 0 holds the scaling hats on the coarse grid; level l >= 1 holds the
// n0*2^{l-1} wavelets between grids l-1 and l. All functions are
// L2-normalized. The two-scale transform is a lifting scheme (predict by
// midpoint interpolation, update by the moment weights) and is exact.
class IntervalBasis {
  public:
    static IntervalBasis build(BasisFlavor flavor, int d, int d_tilde, double length,
                               int max_level, int coarse_cells = 0);

    BasisFlavor flavor() const { return flavor_; }
    double length() const { return length_; }
    int max_level() const { return max_level_; }
    int coarse_cells() const { return n0_; }
    bool left_boundary_free() const { return flavor_ == BasisFlavor::temporal_test; }

    int count(int level) const;        // basis functions at one level
    int total_count(int max_lvl) const;  // cumulative through max_lvl
    int flat_index(WaveletIndex idx) const;
    WaveletIndex index_at(int flat) const;

    // the L2-normalized primal function
    const PiecewisePoly& eval(WaveletIndex idx) const;
    double norm_factor(WaveletIndex idx) const;  // L2 norm before normalization

    // diagonal rescaling weight 2^{s*level} (metadata only)
    double rescale_weight(WaveletIndex idx, double s) const;

    // --- transforms ------------------------------------------------------
    // single-scale nodal values on grid `level` <-> multiscale coefficients
    // of the L2-normalized basis through that level. Nodal vectors have
    // length n0*2^level + 1 and carry zeros at constrained endpoints.
    std::vector<double> analyze(const std::vector<double>& nodal, int level) const;
    std::vector<double> synthesize(const std::vector<double>& coeffs, int level) const;

    // biorthogonal projection onto levels <= k: coefficients <f, dual>
    // computed through the inverse transform of a fine interpolant
    std::vector<double> dual_project(int k, const std::function<double(double)>& f,
                                     int interp_level = -1) const;
    // function reconstruction from multiscale coefficients (levels <= k)
    PiecewisePoly synthesize_function(const std::vector<double>& coeffs, int k) const;

    // --- audit helpers ----------------------------------------------------
    double moment_residual(WaveletIndex idx, int moment) const;  // |int t^m psi|
    double boundary_value_left(WaveletIndex idx) const;
    double max_support_length(int level) const;
    int max_overlap_count(int level) const;

    size_t node_count(int level) const {
        return static_cast<size_t>(n0_ * (1 << level)) + 1;
    }
    double grid_step(int level) const {
        return length_ / static_cast<double>(n0_ * (1 << level));
    }
    bool node_admissible(int level, int node) const;

  private:
    BasisFlavor flavor_ = BasisFlavor::temporal_trial;
    double length_ = 1.0;
    int n0_ = 4;
    int max_level_ = 0;

    struct Lift {
        int n = 0;  // number of coarse targets (up to 4; more near boundaries)
        std::array<int, 8> nodes{};
        std::array<double, 8> weights{};
    };
    // lifts_[l-1][w] describes the wavelet at (level l, translation w)
    std::vector<std::vector<Lift>> lifts_;

    std::vector<std::vector<PiecewisePoly>> funcs_;  // [level][translation]
    std::vector<std::vector<double>> norms_;

    PiecewisePoly scaling_hat(int grid_level, int node) const;
    void build_level(int level);
};

}  // namespace pgst

#endif
