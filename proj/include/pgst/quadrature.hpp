#ifndef PGST_QUADRATURE_HPP
#define PGST_QUADRATURE_HPP

#include <functional>
#include <span>
#include <vector>

namespace pgst {

// Gauss-Legendre rule on [-1,1]; nodes/weights computed once per order by
// Newton iteration on the Legendre recurrence and cached.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussRule& gauss_rule(int order);

// integral of f over [a,b] with a single rule of the given order
double gauss_integrate(const std::function<double(double)>& f, double a, double b,
                       int order = 12);

// Composite rule: panels given by the sorted breakpoint list, fixed order per panel.
double gauss_integrate_panels(const std::function<double(double)>& f,
                              std::span<const double> breakpoints, int order = 12);

// Adaptive bisection driven by comparing two Gauss orders on each interval.
// Handles integrable endpoint kinks (|x-c|^{1/2} type) via depth-limited refinement.
double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth = 48);

// Adaptive integration over panels split at the given interior breakpoints.
double adaptive_integrate_breakpoints(const std::function<double(double)>& f,
                                      std::span<const double> breakpoints,
                                      double abs_tol);

}  // namespace pgst

#endif
