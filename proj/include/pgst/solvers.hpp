#ifndef PGST_SOLVERS_HPP
#define PGST_SOLVERS_HPP

#include <cstdint>
#include <vector>

#include "pgst/assembly.hpp"
#include "pgst/compressive.hpp"

namespace pgst {

struct SolveReport {
    SparseCoeffVector coefficients;
    double residual_bound = 0.0;  // certified coefficient-space error bound
    int iterations = 0;
    bool converged = false;
    std::vector<double> eta_history;
    std::vector<size_t> support_history;
    std::vector<uint64_t> work_history;
    std::vector<double> bound_history;
};

// Galerkin solve of the scaled section by conjugate gradients on its normal
// equations (sections are least-squares stable; the test set may be the
// slightly larger one, the solve is then minimal-residual Petrov-Galerkin).
SolveReport solve_fixed(const TensorOperator& op, const IndexSet& trial,
                        const IndexSet& test, const SparseCoeffVector& rhs,
                        double cg_tol = 1e-10, int max_iter = 0);

// discrete inf-sup constant: smallest singular value of the scaled section
double estimate_infsup(const TensorOperator& op, const IndexSet& trial,
                       const IndexSet& test);

struct AdaptiveParams {
    double eta0 = -1.0;         // initial tolerance; default from ||f||
    double omega = -1.0;        // fixed damping; default: Chebyshev schedule
    double theta_coarse = 0.5;  // coarsening slack
    int coarsen_every = 5;      // iterations per coarsening = damping cycle length
    int max_outer = 400;        // outer cycles
    double sigma_min = -1.0;    // cached smallest singular value estimate
    const IndexSet* universe = nullptr;  // restrict the iteration to this set
};

// Damped Richardson iteration u <- u + omega_j (RHS[eta] - APPLY[u, eta]) on
// the normal equations with recurrent coarsening, terminating on a certified
// residual-based error bound. By default the scalar damping factors follow a
// Chebyshev schedule over the estimated spectral interval of B'B (one cycle
// per coarsening period); a fixed omega reproduces the plain iteration.
SolveReport solve_adaptive(const CompressedOperator& cop, const RhsProvider& rhs,
                           double eps_target, const AdaptiveParams& params = {});

struct CoercivityCheck {
    double min_ratio = 0.0;     // min over samples of B(w, v)/(||w||_X ||v||_Y)
    double mean_ratio = 0.0;
    double alpha = 0.0;
    int samples = 0;
    double window_sensitivity = 0.0;  // relative change under window doubling
};

// numeric half-line inf-sup witness: v = restriction of H^{-alpha} applied to
// the zero extension of w, for random w drawn from the temporal trial basis
CoercivityCheck verify_coercivity_halfline(const TensorOperator& op, double alpha,
                                           int n_samples, unsigned seed,
                                           int max_temporal_level = 3);

// least-squares slope of y against x
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pgst

#endif
