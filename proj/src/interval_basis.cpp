#include "pgst/interval_basis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pgst {

namespace {

// moments of a hat over its support: m0 = \int phi, m1 = \int t phi
void hat_moments(double center, double h, bool left_half_only, double& m0, double& m1) {
    if (left_half_only) {
        // descending half-hat on [center, center+h] with value 1 at center
        m0 = 0.5 * h;
        m1 = 0.5 * h * center + h * h / 6.0;
        return;
    }
    m0 = h;
    m1 = h * center;
}

}  // namespace

bool IntervalBasis::node_admissible(int level, int node) const {
    const int n = n0_ * (1 << level);
    if (node <= 0) return node == 0 && left_boundary_free();
    return node < n;  // the right endpoint is always constrained
}

PiecewisePoly IntervalBasis::scaling_hat(int grid_level, int node) const {
    const double h = grid_step(grid_level);
    const int n = n0_ * (1 << grid_level);
    const double x = node * h;
    if (node == 0) return PiecewisePoly::linear_interpolant({0.0, h}, {1.0, 0.0});
    if (node == n) return PiecewisePoly::linear_interpolant({x - h, x}, {0.0, 1.0});
    return PiecewisePoly::linear_interpolant({x - h, x, x + h}, {0.0, 1.0, 0.0});
}

IntervalBasis IntervalBasis::build(BasisFlavor flavor, int d, int d_tilde, double length,
                                   int max_level, int coarse_cells) {
    if (d != 2 || d_tilde != 2)
        throw std::invalid_argument("IntervalBasis: only order (2,2) is supported");
    if (max_level < 0 || max_level > 14)
        throw std::invalid_argument("IntervalBasis: max_level out of range [0,14]");
    if (!(length > 0.0)) throw std::invalid_argument("IntervalBasis: length must be > 0");
    IntervalBasis b;
    b.flavor_ = flavor;
    b.length_ = length;
    b.n0_ = coarse_cells > 0 ? coarse_cells : 4;
    // the coarse grid must leave two admissible hats next to every boundary
    // so the moment lifting is solvable there
    if (b.n0_ < 4) throw std::invalid_argument("IntervalBasis: need >= 4 coarse cells");
    b.max_level_ = max_level;
    b.funcs_.resize(static_cast<size_t>(max_level) + 1);
    b.norms_.resize(static_cast<size_t>(max_level) + 1);
    b.lifts_.resize(static_cast<size_t>(max_level));
    for (int l = 0; l <= max_level; ++l) b.build_level(l);
    return b;
}

void IntervalBasis::build_level(int level) {
    auto& fns = funcs_[static_cast<size_t>(level)];
    auto& nrm = norms_[static_cast<size_t>(level)];
    if (level == 0) {
        for (int node = 0; node <= n0_; ++node) {
            if (!node_admissible(0, node)) continue;
            PiecewisePoly hat = scaling_hat(0, node);
            const double n = hat.l2_norm();
            nrm.push_back(n);
            fns.push_back(hat.scaled(1.0 / n));
        }
        return;
    }
    const int coarse_level = level - 1;
    const int n_coarse = n0_ * (1 << coarse_level);
    const double h_coarse = grid_step(coarse_level);
    auto& lifts = lifts_[static_cast<size_t>(level - 1)];
    lifts.resize(static_cast<size_t>(n_coarse));
    for (int w = 0; w < n_coarse; ++w) {
        // new node sits between coarse nodes w and w+1
        const double x_new = (w + 0.5) * h_coarse;
        const PiecewisePoly fine_hat = scaling_hat(level, 2 * w + 1);
        std::vector<int> cand;
        if (node_admissible(coarse_level, w) && node_admissible(coarse_level, w + 1)) {
            // interior: the classical flanking pair, unique moment solution
            cand = {w, w + 1};
        } else {
            // boundary: three nearest admissible hats; the spare degree of
            // freedom minimizes the energy of the subtracted coarse part,
            // which keeps the wavelet well-angled against the coarse space
            for (int c = std::max(0, w - 4); c <= std::min(n_coarse, w + 5); ++c)
                if (node_admissible(coarse_level, c)) cand.push_back(c);
            std::sort(cand.begin(), cand.end(), [&](int a, int c) {
                const double da = std::abs(a * h_coarse - x_new);
                const double dc = std::abs(c * h_coarse - x_new);
                if (da != dc) return da < dc;
                return a < c;
            });
            cand.resize(std::min<size_t>(cand.size(), 3));
            std::sort(cand.begin(), cand.end());
        }
        const int m = static_cast<int>(cand.size());
        if (m < 2) throw std::logic_error("IntervalBasis: lifting underdetermined");

        Eigen::MatrixXd moments(2, m);
        std::vector<PiecewisePoly> hats(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j) {
            double m0, m1;
            hat_moments(cand[static_cast<size_t>(j)] * h_coarse, h_coarse,
                        cand[static_cast<size_t>(j)] == 0, m0, m1);
            moments(0, j) = m0;
            moments(1, j) = m1;
            hats[static_cast<size_t>(j)] = scaling_hat(coarse_level, cand[static_cast<size_t>(j)]);
        }
        double f0, f1;
        hat_moments(x_new, 0.5 * h_coarse, false, f0, f1);
        Eigen::Vector2d rhs(f0, f1);

        Eigen::VectorXd wts;
        if (m == 2) {
            wts = moments.colPivHouseholderQr().solve(rhs);
        } else {
            Eigen::MatrixXd gram(m, m);
            for (int i = 0; i < m; ++i)
                for (int j = i; j < m; ++j) {
                    gram(i, j) =
                        hats[static_cast<size_t>(i)].inner_product(hats[static_cast<size_t>(j)]);
                    gram(j, i) = gram(i, j);
                }
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 2, m + 2);
            kkt.topLeftCorner(m, m) = gram;
            kkt.block(m, 0, 2, m) = moments;
            kkt.block(0, m, m, 2) = moments.transpose();
            Eigen::VectorXd kr = Eigen::VectorXd::Zero(m + 2);
            kr.segment(m, 2) = rhs;
            wts = kkt.colPivHouseholderQr().solve(kr).head(m);
        }

        std::vector<std::pair<double, const PiecewisePoly*>> terms;
        terms.push_back({1.0, &fine_hat});
        for (int j = 0; j < m; ++j) terms.push_back({-wts(j), &hats[static_cast<size_t>(j)]});
        PiecewisePoly psi = PiecewisePoly::linear_combination(terms);
        const double n = psi.l2_norm();
        nrm.push_back(n);
        fns.push_back(psi.scaled(1.0 / n));

        Lift lift{};
        lift.n = m;
        for (int j = 0; j < m; ++j) {
            lift.nodes[static_cast<size_t>(j)] = cand[static_cast<size_t>(j)];
            lift.weights[static_cast<size_t>(j)] = wts(j);
        }
        lifts[static_cast<size_t>(w)] = lift;
    }
}

int IntervalBasis::count(int level) const {
    if (level == 0) return n0_ - 1 + (left_boundary_free() ? 1 : 0);
    return n0_ * (1 << (level - 1));
}

int IntervalBasis::total_count(int max_lvl) const {
    int t = 0;
    for (int l = 0; l <= max_lvl; ++l) t += count(l);
    return t;
}

int IntervalBasis::flat_index(WaveletIndex idx) const {
    int off = 0;
    for (int l = 0; l < idx.level; ++l) off += count(l);
    return off + idx.translation;
}

WaveletIndex IntervalBasis::index_at(int flat) const {
    int l = 0;
    while (flat >= count(l)) {
        flat -= count(l);
        ++l;
    }
    return WaveletIndex{l, flat};
}

const PiecewisePoly& IntervalBasis::eval(WaveletIndex idx) const {
    if (idx.level < 0 || idx.level > max_level_)
        throw std::out_of_range("IntervalBasis::eval: level out of range");
    const auto& fns = funcs_[static_cast<size_t>(idx.level)];
    if (idx.translation < 0 || static_cast<size_t>(idx.translation) >= fns.size())
        throw std::out_of_range("IntervalBasis::eval: translation out of range");
    return fns[static_cast<size_t>(idx.translation)];
}

double IntervalBasis::norm_factor(WaveletIndex idx) const {
    return norms_[static_cast<size_t>(idx.level)][static_cast<size_t>(idx.translation)];
}

double IntervalBasis::rescale_weight(WaveletIndex idx, double s) const {
    return std::pow(2.0, s * static_cast<double>(idx.level));
}

// --- transforms -------------------------------------------------------------

std::vector<double> IntervalBasis::analyze(const std::vector<double>& nodal,
                                           int level) const {
    if (nodal.size() != node_count(level))
        throw std::invalid_argument("analyze: nodal size mismatch");
    std::vector<double> values = nodal;
    std::vector<std::vector<double>> details(static_cast<size_t>(level));
    for (int l = level; l >= 1; --l) {
        const int nc = n0_ * (1 << (l - 1));
        std::vector<double> coarse(static_cast<size_t>(nc) + 1);
        std::vector<double> d(static_cast<size_t>(nc));
        for (int i = 0; i <= nc; ++i) coarse[static_cast<size_t>(i)] = values[static_cast<size_t>(2 * i)];
        for (int w = 0; w < nc; ++w)
            d[static_cast<size_t>(w)] =
                values[static_cast<size_t>(2 * w + 1)] -
                0.5 * (coarse[static_cast<size_t>(w)] + coarse[static_cast<size_t>(w + 1)]);
        // update: move the wavelets' coarse-hat parts into the coarse coeffs
        const auto& lifts = lifts_[static_cast<size_t>(l - 1)];
        for (int w = 0; w < nc; ++w) {
            const Lift& lf = lifts[static_cast<size_t>(w)];
            for (int j = 0; j < lf.n; ++j)
                coarse[static_cast<size_t>(lf.nodes[static_cast<size_t>(j)])] +=
                    lf.weights[static_cast<size_t>(j)] * d[static_cast<size_t>(w)];
        }
        details[static_cast<size_t>(l - 1)] = std::move(d);
        values = std::move(coarse);
    }
    // flatten: level-0 admissible nodes first, then wavelet levels; rescale to
    // the L2-normalized basis
    std::vector<double> out;
    out.reserve(static_cast<size_t>(total_count(level)));
    {
        size_t t = 0;
        for (int node = 0; node <= n0_; ++node) {
            if (!node_admissible(0, node)) continue;
            out.push_back(values[static_cast<size_t>(node)] *
                          norms_[0][t]);
            ++t;
        }
    }
    for (int l = 1; l <= level; ++l) {
        const auto& d = details[static_cast<size_t>(l - 1)];
        for (size_t w = 0; w < d.size(); ++w)
            out.push_back(d[w] * norms_[static_cast<size_t>(l)][w]);
    }
    return out;
}

std::vector<double> IntervalBasis::synthesize(const std::vector<double>& coeffs,
                                              int level) const {
    if (coeffs.size() != static_cast<size_t>(total_count(level)))
        throw std::invalid_argument("synthesize: coefficient size mismatch");
    // unpack and undo the L2 normalization
    std::vector<double> values(node_count(0), 0.0);
    size_t pos = 0;
    {
        size_t t = 0;
        for (int node = 0; node <= n0_; ++node) {
            if (!node_admissible(0, node)) continue;
            values[static_cast<size_t>(node)] = coeffs[pos] / norms_[0][t];
            ++pos;
            ++t;
        }
    }
    for (int l = 1; l <= level; ++l) {
        const int nc = n0_ * (1 << (l - 1));
        const auto& lifts = lifts_[static_cast<size_t>(l - 1)];
        std::vector<double> d(static_cast<size_t>(nc));
        for (int w = 0; w < nc; ++w) {
            d[static_cast<size_t>(w)] =
                coeffs[pos] / norms_[static_cast<size_t>(l)][static_cast<size_t>(w)];
            ++pos;
        }
        // undo update, then refine
        for (int w = 0; w < nc; ++w) {
            const Lift& lf = lifts[static_cast<size_t>(w)];
            for (int j = 0; j < lf.n; ++j)
                values[static_cast<size_t>(lf.nodes[static_cast<size_t>(j)])] -=
                    lf.weights[static_cast<size_t>(j)] * d[static_cast<size_t>(w)];
        }
        std::vector<double> fine(node_count(l), 0.0);
        for (int i = 0; i <= nc; ++i) fine[static_cast<size_t>(2 * i)] = values[static_cast<size_t>(i)];
        for (int w = 0; w < nc; ++w)
            fine[static_cast<size_t>(2 * w + 1)] =
                d[static_cast<size_t>(w)] +
                0.5 * (values[static_cast<size_t>(w)] + values[static_cast<size_t>(w + 1)]);
        values = std::move(fine);
    }
    return values;
}

std::vector<double> IntervalBasis::dual_project(int k, const std::function<double(double)>& f,
                                                int interp_level) const {
    const int J = interp_level >= 0 ? interp_level : std::min(k + 3, max_level_);
    if (J < k) throw std::invalid_argument("dual_project: interpolation level below k");
    std::vector<double> nodal(node_count(J), 0.0);
    const double h = grid_step(J);
    const int n = n0_ * (1 << J);
    for (int i = 0; i <= n; ++i)
        nodal[static_cast<size_t>(i)] = node_admissible(J, i) ? f(i * h) : 0.0;
    std::vector<double> all = analyze(nodal, J);
    all.resize(static_cast<size_t>(total_count(k)));  // drop detail levels > k
    return all;
}

PiecewisePoly IntervalBasis::synthesize_function(const std::vector<double>& coeffs,
                                                 int k) const {
    const std::vector<double> nodal = synthesize(coeffs, k);
    const int n = n0_ * (1 << k);
    const double h = grid_step(k);
    std::vector<double> nodes(static_cast<size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) nodes[static_cast<size_t>(i)] = i * h;
    return PiecewisePoly::linear_interpolant(nodes, nodal);
}

// --- audits -----------------------------------------------------------------

double IntervalBasis::moment_residual(WaveletIndex idx, int moment) const {
    return std::abs(eval(idx).moment(moment));
}

double IntervalBasis::boundary_value_left(WaveletIndex idx) const {
    return std::abs(eval(idx)(0.0));
}

double IntervalBasis::max_support_length(int level) const {
    double m = 0.0;
    for (int t = 0; t < count(level); ++t) {
        const auto& p = eval(WaveletIndex{level, t});
        m = std::max(m, p.support_right() - p.support_left());
    }
    return m;
}

int IntervalBasis::max_overlap_count(int level) const {
    // max number of same-level functions covering one point
    const int n = count(level);
    int worst = 0;
    const int probes = 4 * n0_ * (1 << level);
    for (int i = 0; i <= probes; ++i) {
        const double x = length_ * i / probes;
        int c = 0;
        for (int t = 0; t < n; ++t) {
            const auto& p = eval(WaveletIndex{level, t});
            if (x > p.support_left() && x < p.support_right()) ++c;
        }
        worst = std::max(worst, c);
    }
    return worst;
}

}  // namespace pgst
