#include "pgst/piecewise_poly.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace pgst {

namespace {

double eval_local(const PiecewisePoly::Coeffs& c, double u) {
    return ((c[3] * u + c[2]) * u + c[1]) * u + c[0];
}

double eval_local_deriv(const PiecewisePoly::Coeffs& c, double u) {
    return (3.0 * c[3] * u + 2.0 * c[2]) * u + c[1];
}

}  // namespace

PiecewisePoly::Coeffs shift_coeffs(const PiecewisePoly::Coeffs& c, double delta) {
    // p(u+delta): repeated synthetic division
    PiecewisePoly::Coeffs r = c;
    for (int i = 0; i < PiecewisePoly::kMaxDegree; ++i)
        for (int j = PiecewisePoly::kMaxDegree - 1; j >= i; --j)
            r[j] += delta * r[j + 1];
    return r;
}

PiecewisePoly::PiecewisePoly(std::vector<double> breakpoints, std::vector<Coeffs> pieces)
    : bp_(std::move(breakpoints)), coef_(std::move(pieces)) {
    if (bp_.size() != coef_.size() + 1)
        throw std::invalid_argument("PiecewisePoly: breakpoints/pieces mismatch");
    for (size_t i = 0; i + 1 < bp_.size(); ++i)
        if (!(bp_[i] < bp_[i + 1]))
            throw std::invalid_argument("PiecewisePoly: breakpoints not increasing");
}

PiecewisePoly PiecewisePoly::constant(double c, double a, double b) {
    return PiecewisePoly({a, b}, {Coeffs{c, 0, 0, 0}});
}

PiecewisePoly PiecewisePoly::monomial(double c, int k, double a, double b) {
    if (k < 0 || k > kMaxDegree) throw std::invalid_argument("monomial degree");
    Coeffs cf{0, 0, 0, 0};
    cf[static_cast<size_t>(k)] = c;
    return PiecewisePoly({a, b}, {cf});
}

PiecewisePoly PiecewisePoly::linear_interpolant(const std::vector<double>& nodes,
                                                const std::vector<double>& values) {
    if (nodes.size() != values.size() || nodes.size() < 2)
        throw std::invalid_argument("linear_interpolant: bad sizes");
    std::vector<Coeffs> pieces(nodes.size() - 1);
    for (size_t i = 0; i + 1 < nodes.size(); ++i) {
        const double h = nodes[i + 1] - nodes[i];
        pieces[i] = Coeffs{values[i], (values[i + 1] - values[i]) / h, 0, 0};
    }
    return PiecewisePoly(nodes, std::move(pieces));
}

int PiecewisePoly::find_piece(double t) const {
    if (bp_.empty() || t < bp_.front() || t >= bp_.back()) return -1;
    auto it = std::upper_bound(bp_.begin(), bp_.end(), t);
    return static_cast<int>(it - bp_.begin()) - 1;
}

double PiecewisePoly::operator()(double t) const {
    const int i = find_piece(t);
    if (i < 0) {
        // right endpoint of the support: take the left limit so the value is
        // the function value (support is closed)
        if (!bp_.empty() && t == bp_.back())
            return eval_local(coef_.back(), t - bp_[bp_.size() - 2]);
        return 0.0;
    }
    return eval_local(coef_[static_cast<size_t>(i)], t - bp_[static_cast<size_t>(i)]);
}

double PiecewisePoly::eval_left(double t) const {
    if (bp_.empty() || t <= bp_.front() || t > bp_.back()) return 0.0;
    auto it = std::lower_bound(bp_.begin(), bp_.end(), t);  // first >= t, index >= 1
    const size_t i = static_cast<size_t>(it - bp_.begin());
    return eval_local(coef_[i - 1], t - bp_[i - 1]);
}

double PiecewisePoly::derivative_at(double t) const {
    const int i = find_piece(t);
    if (i < 0) return 0.0;
    return eval_local_deriv(coef_[static_cast<size_t>(i)], t - bp_[static_cast<size_t>(i)]);
}

PiecewisePoly PiecewisePoly::derivative() const {
    std::vector<Coeffs> d(coef_.size());
    for (size_t i = 0; i < coef_.size(); ++i)
        d[i] = Coeffs{coef_[i][1], 2.0 * coef_[i][2], 3.0 * coef_[i][3], 0.0};
    return PiecewisePoly(bp_, std::move(d));
}

PiecewisePoly PiecewisePoly::scaled(double a) const {
    std::vector<Coeffs> s = coef_;
    for (auto& c : s)
        for (double& v : c) v *= a;
    return PiecewisePoly(bp_, std::move(s));
}

PiecewisePoly PiecewisePoly::clipped(double a, double b) const {
    if (empty() || a >= support_right() || b <= support_left()) return PiecewisePoly();
    std::vector<double> nb;
    std::vector<Coeffs> nc;
    for (size_t i = 0; i < coef_.size(); ++i) {
        const double lo = std::max(bp_[i], a);
        const double hi = std::min(bp_[i + 1], b);
        if (!(lo < hi)) continue;
        if (nb.empty()) nb.push_back(lo);
        nb.push_back(hi);
        nc.push_back(shift_coeffs(coef_[i], lo - bp_[i]));
    }
    if (nc.empty()) return PiecewisePoly();
    return PiecewisePoly(std::move(nb), std::move(nc));
}

double PiecewisePoly::integral() const {
    double s = 0.0;
    for (size_t i = 0; i < coef_.size(); ++i) {
        const double h = bp_[i + 1] - bp_[i];
        double hp = h;
        for (int k = 0; k <= kMaxDegree; ++k) {
            s += coef_[i][static_cast<size_t>(k)] * hp / (k + 1);
            hp *= h;
        }
    }
    return s;
}

double PiecewisePoly::moment(int k) const {
    // \int s^k p(s) ds, exact: expand s^k = (u + a)^k locally
    double s = 0.0;
    for (size_t i = 0; i < coef_.size(); ++i) {
        const double a = bp_[i];
        const double h = bp_[i + 1] - bp_[i];
        // binomial expansion of (u+a)^k, k <= 3 needed in practice but keep general
        std::vector<double> binco(static_cast<size_t>(k) + 1);
        {
            double c = 1.0;
            for (int j = 0; j <= k; ++j) {
                binco[static_cast<size_t>(j)] = c * std::pow(a, k - j);
                c = c * (k - j) / (j + 1.0);
            }
        }
        for (int j = 0; j <= k; ++j)
            for (int d = 0; d <= kMaxDegree; ++d) {
                const int pw = j + d + 1;
                s += binco[static_cast<size_t>(j)] * coef_[i][static_cast<size_t>(d)] *
                     std::pow(h, pw) / pw;
            }
    }
    return s;
}

double PiecewisePoly::inner_product(const PiecewisePoly& other) const {
    if (empty() || other.empty()) return 0.0;
    const double lo = std::max(support_left(), other.support_left());
    const double hi = std::min(support_right(), other.support_right());
    if (!(lo < hi)) return 0.0;
    // merged grid on the overlap
    std::set<double> cuts;
    cuts.insert(lo);
    cuts.insert(hi);
    for (double x : bp_)
        if (x > lo && x < hi) cuts.insert(x);
    for (double x : other.bp_)
        if (x > lo && x < hi) cuts.insert(x);
    std::vector<double> grid(cuts.begin(), cuts.end());
    double total = 0.0;
    for (size_t c = 0; c + 1 < grid.size(); ++c) {
        const double x0 = grid[c], x1 = grid[c + 1];
        const double xm = 0.5 * (x0 + x1);
        const int ia = find_piece(xm);
        const int ib = other.find_piece(xm);
        if (ia < 0 || ib < 0) continue;
        const Coeffs pa = shift_coeffs(coef_[static_cast<size_t>(ia)], x0 - bp_[static_cast<size_t>(ia)]);
        const Coeffs pb = shift_coeffs(other.coef_[static_cast<size_t>(ib)],
                                       x0 - other.bp_[static_cast<size_t>(ib)]);
        // product degree <= 6, integrate monomials on [0, x1-x0]
        double prod[2 * kMaxDegree + 1] = {0};
        for (int i = 0; i <= kMaxDegree; ++i)
            for (int j = 0; j <= kMaxDegree; ++j)
                prod[i + j] += pa[static_cast<size_t>(i)] * pb[static_cast<size_t>(j)];
        const double h = x1 - x0;
        double hp = h;
        for (int k = 0; k <= 2 * kMaxDegree; ++k) {
            total += prod[k] * hp / (k + 1);
            hp *= h;
        }
    }
    return total;
}

double PiecewisePoly::l2_norm_sq() const { return inner_product(*this); }
double PiecewisePoly::l2_norm() const { return std::sqrt(std::max(0.0, l2_norm_sq())); }

double PiecewisePoly::sup_norm() const {
    double m = 0.0;
    for (size_t i = 0; i < coef_.size(); ++i) {
        const double h = bp_[i + 1] - bp_[i];
        m = std::max(m, std::abs(eval_local(coef_[i], 0.0)));
        m = std::max(m, std::abs(eval_local(coef_[i], h)));
        // interior critical points of the cubic: roots of quadratic p'
        const double a = 3.0 * coef_[i][3], b = 2.0 * coef_[i][2], cc = coef_[i][1];
        if (a != 0.0) {
            const double disc = b * b - 4.0 * a * cc;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                for (double r : {(-b + sq) / (2 * a), (-b - sq) / (2 * a)})
                    if (r > 0.0 && r < h) m = std::max(m, std::abs(eval_local(coef_[i], r)));
            }
        } else if (b != 0.0) {
            const double r = -cc / b;
            if (r > 0.0 && r < h) m = std::max(m, std::abs(eval_local(coef_[i], r)));
        }
    }
    return m;
}

double PiecewisePoly::derivative_sup_norm() const { return derivative().sup_norm(); }

PiecewisePoly PiecewisePoly::linear_combination(
    const std::vector<std::pair<double, const PiecewisePoly*>>& terms) {
    std::set<double> cuts;
    for (const auto& [c, p] : terms) {
        (void)c;
        if (p && !p->empty())
            for (double x : p->breakpoints()) cuts.insert(x);
    }
    if (cuts.size() < 2) return PiecewisePoly();
    std::vector<double> grid(cuts.begin(), cuts.end());
    std::vector<Coeffs> pieces(grid.size() - 1, Coeffs{0, 0, 0, 0});
    for (const auto& [w, p] : terms) {
        if (!p || p->empty() || w == 0.0) continue;
        for (size_t c = 0; c + 1 < grid.size(); ++c) {
            const double x0 = grid[c];
            const double xm = 0.5 * (x0 + grid[c + 1]);
            const int ip = p->find_piece(xm);
            if (ip < 0) continue;
            const Coeffs sc =
                shift_coeffs(p->pieces()[static_cast<size_t>(ip)],
                             x0 - p->breakpoints()[static_cast<size_t>(ip)]);
            for (int k = 0; k <= kMaxDegree; ++k)
                pieces[c][static_cast<size_t>(k)] += w * sc[static_cast<size_t>(k)];
        }
    }
    PiecewisePoly out(std::move(grid), std::move(pieces));
    out.trim(0.0);
    return out;
}

double PiecewisePoly::max_jump() const {
    double m = 0.0;
    for (size_t i = 1; i < coef_.size(); ++i) {
        const double left = eval_local(coef_[i - 1], bp_[i] - bp_[i - 1]);
        const double right = eval_local(coef_[i], 0.0);
        m = std::max(m, std::abs(left - right));
    }
    return m;
}

void PiecewisePoly::trim(double tol) {
    auto is_zero = [&](const Coeffs& c) {
        for (double v : c)
            if (std::abs(v) > tol) return false;
        return true;
    };
    size_t lo = 0, hi = coef_.size();
    while (lo < hi && is_zero(coef_[lo])) ++lo;
    while (hi > lo && is_zero(coef_[hi - 1])) --hi;
    if (lo == 0 && hi == coef_.size()) return;
    if (lo >= hi) {
        bp_.clear();
        coef_.clear();
        return;
    }
    coef_ = std::vector<Coeffs>(coef_.begin() + static_cast<long>(lo),
                                coef_.begin() + static_cast<long>(hi));
    bp_ = std::vector<double>(bp_.begin() + static_cast<long>(lo),
                              bp_.begin() + static_cast<long>(hi) + 1);
}

}  // namespace pgst
