#include "pgst/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace pgst {

namespace {

GaussRule compute_rule(int n) {
    // Newton iteration on P_n, symmetric nodes. Standard construction,
    // cf. the quadrature generators in common FEM libraries.
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double pi = std::numbers::pi;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    return r;
}

std::map<int, GaussRule> g_rules;
std::mutex g_rules_mutex;

}  // namespace

const GaussRule& gauss_rule(int order) {
    if (order < 1) throw std::invalid_argument("gauss_rule: order must be >= 1");
    std::lock_guard<std::mutex> lock(g_rules_mutex);
    auto it = g_rules.find(order);
    if (it == g_rules.end()) it = g_rules.emplace(order, compute_rule(order)).first;
    return it->second;
}

double gauss_integrate(const std::function<double(double)>& f, double a, double b,
                       int order) {
    const GaussRule& r = gauss_rule(order);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (size_t i = 0; i < r.nodes.size(); ++i)
        sum += r.weights[i] * f(mid + half * r.nodes[i]);
    return half * sum;
}

double gauss_integrate_panels(const std::function<double(double)>& f,
                              std::span<const double> breakpoints, int order) {
    double sum = 0.0;
    for (size_t i = 0; i + 1 < breakpoints.size(); ++i)
        sum += gauss_integrate(f, breakpoints[i], breakpoints[i + 1], order);
    return sum;
}

namespace {

double adaptive_rec(const std::function<double(double)>& f, double a, double b,
                    double coarse, double tol, double floor, int depth, int max_depth) {
    const double mid = 0.5 * (a + b);
    const double left = gauss_integrate(f, a, mid, 10);
    const double right = gauss_integrate(f, mid, b, 10);
    const double fine = left + right;
    if (depth >= max_depth) return fine;
    const double diff = std::abs(fine - coarse);
    if (diff <= std::max(tol, floor) || mid <= a || mid >= b) return fine;
    const double child_tol = std::max(0.5 * tol, floor);
    return adaptive_rec(f, a, mid, left, child_tol, floor, depth + 1, max_depth) +
           adaptive_rec(f, mid, b, right, child_tol, floor, depth + 1, max_depth);
}

}  // namespace

double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, int max_depth) {
    if (!(b > a)) return 0.0;
    const double coarse = gauss_integrate(f, a, b, 10);
    // refinement below roundoff cannot improve the result
    const double floor = 1e-16 * (1.0 + std::abs(coarse));
    return adaptive_rec(f, a, b, coarse, abs_tol, floor, 0, max_depth);
}

double adaptive_integrate_breakpoints(const std::function<double(double)>& f,
                                      std::span<const double> breakpoints,
                                      double abs_tol) {
    if (breakpoints.size() < 2) return 0.0;
    const double tol_per = abs_tol / static_cast<double>(breakpoints.size() - 1);
    double sum = 0.0;
    for (size_t i = 0; i + 1 < breakpoints.size(); ++i)
        sum += adaptive_integrate(f, breakpoints[i], breakpoints[i + 1], tol_per);
    return sum;
}

}  // namespace pgst
