#ifndef PGST_PIECEWISE_POLY_HPP
#define PGST_PIECEWISE_POLY_HPP

#include <array>
#include <cstddef>
#include <vector>

namespace pgst {

// Compactly supported piecewise polynomial of degree <= 3 on a strictly
// increasing breakpoint grid; identically zero outside
// [breakpoints.front(), breakpoints.back()].
//
// Piece i lives on [bp[i], bp[i+1]] and is stored in local coordinates:
//   p_i(s) = sum_k coef[i][k] * (s - bp[i])^k.
// Local coordinates keep coefficients well-scaled on fine dyadic cells.
class PiecewisePoly {
  public:
    static constexpr int kMaxDegree = 3;
    using Coeffs = std::array<double, kMaxDegree + 1>;

    PiecewisePoly() = default;
    PiecewisePoly(std::vector<double> breakpoints, std::vector<Coeffs> pieces);

    // constant c on [a,b]
    static PiecewisePoly constant(double c, double a, double b);
    // monomial c*(s-a)^k on [a,b]
    static PiecewisePoly monomial(double c, int k, double a, double b);
    // continuous piecewise-linear interpolant of nodal values
    static PiecewisePoly linear_interpolant(const std::vector<double>& nodes,
                                            const std::vector<double>& values);

    bool empty() const { return coef_.empty(); }
    size_t piece_count() const { return coef_.size(); }
    const std::vector<double>& breakpoints() const { return bp_; }
    const std::vector<Coeffs>& pieces() const { return coef_; }
    double support_left() const { return bp_.empty() ? 0.0 : bp_.front(); }
    double support_right() const { return bp_.empty() ? 0.0 : bp_.back(); }

    double operator()(double t) const;        // breakpoints evaluate from the right
    double eval_left(double t) const;         // limit from below
    double derivative_at(double t) const;     // right limit of p'

    PiecewisePoly derivative() const;         // degree drops by one, a.e. derivative
    PiecewisePoly scaled(double a) const;
    // restriction to [a,b] (support intersected; pieces clipped exactly)
    PiecewisePoly clipped(double a, double b) const;

    double integral() const;                  // \int p
    double moment(int k) const;               // \int s^k p(s) ds
    double l2_norm_sq() const;
    double l2_norm() const;
    double sup_norm() const;                  // max |p| over support
    double derivative_sup_norm() const;

    // exact \int p*q over the merged grid (degree of the product <= 6)
    double inner_product(const PiecewisePoly& other) const;

    // sum_i coeff[i]*poly[i] on the merged breakpoint grid
    static PiecewisePoly linear_combination(
        const std::vector<std::pair<double, const PiecewisePoly*>>& terms);

    // max over breakpoints of |left limit - right limit|
    double max_jump() const;

    // drop leading/trailing pieces that are identically ~0 (keeps support tight)
    void trim(double tol = 0.0);

  private:
    std::vector<double> bp_;
    std::vector<Coeffs> coef_;
    int find_piece(double t) const;  // -1 if outside support
};

// Taylor shift: coefficients of p(u + delta) given coefficients of p(u).
PiecewisePoly::Coeffs shift_coeffs(const PiecewisePoly::Coeffs& c, double delta);

}  // namespace pgst

#endif
