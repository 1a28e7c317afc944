#include "pgst/linalg.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pgst {

std::pair<double, double> sym_eig_range(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("sym_eig_range: eigensolver failed");
    const Vec& ev = es.eigenvalues();
    return {ev(0), ev(ev.size() - 1)};
}

double power_iteration_norm(const LinOp& op, const LinOp& op_t, int n_cols, int iters,
                            unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Vec x(n_cols);
    for (int i = 0; i < n_cols; ++i) x(i) = dist(rng);
    double nx = x.norm();
    if (nx == 0.0) return 0.0;
    x /= nx;
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vec y = op_t(op(x));
        const double ny = y.norm();
        if (ny == 0.0) return 0.0;
        lambda = ny;  // eigenvalue of op'*op
        x = y / ny;
    }
    return std::sqrt(lambda);
}

CgResult conjugate_gradient(const LinOp& a, const Vec& b, double rel_tol, int max_iter,
                            const Vec* x0) {
    CgResult res;
    const double nb = b.norm();
    Vec x = x0 ? *x0 : Vec::Zero(b.size());
    if (nb == 0.0) {
        res.x = Vec::Zero(b.size());
        res.converged = true;
        return res;
    }
    Vec r = b - a(x);
    Vec p = r;
    double rs = r.squaredNorm();
    for (int it = 0; it < max_iter; ++it) {
        if (std::sqrt(rs) <= rel_tol * nb) {
            res.converged = true;
            break;
        }
        const Vec ap = a(p);
        const double pap = p.dot(ap);
        if (pap <= 0.0) break;  // loss of positivity, bail out with current x
        const double alpha = rs / pap;
        x += alpha * p;
        r -= alpha * ap;
        const double rs_new = r.squaredNorm();
        p = r + (rs_new / rs) * p;
        rs = rs_new;
        res.iterations = it + 1;
    }
    res.x = std::move(x);
    res.residual = std::sqrt(rs) / nb;
    if (res.residual <= rel_tol) res.converged = true;
    return res;
}

double smallest_eigenvalue_spd(const LinOp& a, int n, double lambda_max,
                               int outer_iters, double cg_tol, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = dist(rng);
    x /= x.norm();
    double lambda = lambda_max;
    for (int it = 0; it < outer_iters; ++it) {
        const int max_cg = 40 * static_cast<int>(std::sqrt(static_cast<double>(n))) + 400;
        CgResult cg = conjugate_gradient(a, x, cg_tol, max_cg);
        const double ny = cg.x.norm();
        if (ny == 0.0) break;
        Vec y = cg.x / ny;
        const double rayleigh = y.dot(a(y));
        if (it > 2 && std::abs(rayleigh - lambda) <= 1e-10 * lambda_max) {
            lambda = rayleigh;
            break;
        }
        lambda = rayleigh;
        x = y;
    }
    return lambda;
}

}  // namespace pgst
