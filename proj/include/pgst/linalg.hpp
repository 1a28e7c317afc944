#ifndef PGST_LINALG_HPP
#define PGST_LINALG_HPP

#include <Eigen/Dense>
#include <functional>

namespace pgst {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using LinOp = std::function<Vec(const Vec&)>;

// eigenvalue range of a symmetric matrix
std::pair<double, double> sym_eig_range(const Mat& a);

// largest singular value of a linear operator, by power iteration on op'*op
double power_iteration_norm(const LinOp& op, const LinOp& op_t, int n_cols,
                            int iters = 60, unsigned seed = 1234);

struct CgResult {
    Vec x;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

// conjugate gradients on an SPD operator
CgResult conjugate_gradient(const LinOp& a, const Vec& b, double rel_tol,
                            int max_iter, const Vec* x0 = nullptr);

// smallest eigenvalue of an SPD operator by inverse iteration, with the inner
// solves done by CG (suited to well-conditioned scaled sections)
double smallest_eigenvalue_spd(const LinOp& a, int n, double lambda_max,
                               int outer_iters = 30, double cg_tol = 1e-10,
                               unsigned seed = 4321);

}  // namespace pgst

#endif
