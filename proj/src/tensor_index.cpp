#include "pgst/tensor_index.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pgst {

bool SpaceTimeIndex::operator<(const SpaceTimeIndex& o) const {
    if (time != o.time) return time < o.time;
    for (int i = 0; i < std::min(dim, o.dim); ++i) {
        const auto& a = space[static_cast<size_t>(i)];
        const auto& b = o.space[static_cast<size_t>(i)];
        if (a != b) return a < b;
    }
    return dim < o.dim;
}

std::string SpaceTimeIndex::to_line() const {
    std::ostringstream os;
    os << "t:" << time.level << "," << time.translation << " x:";
    for (int i = 0; i < dim; ++i) {
        if (i) os << ";";
        os << space[static_cast<size_t>(i)].level << "," << space[static_cast<size_t>(i)].translation;
    }
    return os.str();
}

SpaceTimeIndex SpaceTimeIndex::from_line(const std::string& line) {
    SpaceTimeIndex idx;
    char c;
    std::istringstream is(line);
    if (!(is >> c) || c != 't') throw std::invalid_argument("index line: expected t:");
    is >> c;  // ':'
    is >> idx.time.level >> c >> idx.time.translation;
    std::string rest;
    is >> rest;  // "x:<...>"
    if (rest.rfind("x:", 0) != 0) throw std::invalid_argument("index line: expected x:");
    rest = rest.substr(2);
    idx.dim = 0;
    std::istringstream xs(rest);
    std::string part;
    while (std::getline(xs, part, ';')) {
        if (idx.dim >= kMaxSpaceDim) throw std::invalid_argument("index line: too many dims");
        std::istringstream ps(part);
        WaveletIndex wi;
        ps >> wi.level >> c >> wi.translation;
        idx.space[static_cast<size_t>(idx.dim++)] = wi;
    }
    if (idx.dim == 0) throw std::invalid_argument("index line: no spatial part");
    return idx;
}

size_t SpaceTimeIndexHash::operator()(const SpaceTimeIndex& i) const {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t v) {
        h ^= v;
        h *= 1099511628211ull;
    };
    mix(static_cast<uint64_t>(i.time.level) << 32 |
        static_cast<uint32_t>(i.time.translation));
    for (int d = 0; d < i.dim; ++d)
        mix(static_cast<uint64_t>(i.space[static_cast<size_t>(d)].level) << 32 |
            static_cast<uint32_t>(i.space[static_cast<size_t>(d)].translation));
    mix(static_cast<uint64_t>(i.dim));
    return static_cast<size_t>(h);
}

IndexSet::IndexSet(IndexSetKind kind, std::vector<SpaceTimeIndex> members)
    : kind_(kind), members_(std::move(members)) {
    lookup_.reserve(members_.size() * 2);
    for (size_t i = 0; i < members_.size(); ++i) {
        auto [it, fresh] = lookup_.emplace(members_[i], static_cast<int>(i));
        if (!fresh) throw std::invalid_argument("IndexSet: duplicate member");
        (void)it;
    }
}

bool IndexSet::contains(const SpaceTimeIndex& idx) const {
    return lookup_.find(idx) != lookup_.end();
}

int IndexSet::position(const SpaceTimeIndex& idx) const {
    auto it = lookup_.find(idx);
    return it == lookup_.end() ? -1 : it->second;
}

void IndexSet::write_lines(std::ostream& os) const {
    for (const auto& m : members_) os << m.to_line() << "\n";
}

IndexSet IndexSet::read_lines(std::istream& is, IndexSetKind kind) {
    std::vector<SpaceTimeIndex> members;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        members.push_back(SpaceTimeIndex::from_line(line));
    }
    return IndexSet(kind, std::move(members));
}

namespace {

// enumerate all spatial level tuples with the given per-dimension cap test
void spatial_tuples(const LevelCounts& counts, int dim,
                    const std::function<bool(const std::array<int, kMaxSpaceDim>&)>& admit,
                    const std::function<void(const std::array<int, kMaxSpaceDim>&)>& emit) {
    std::array<int, kMaxSpaceDim> levels{};
    std::function<void(int)> rec = [&](int d) {
        if (d == dim) {
            if (admit(levels)) emit(levels);
            return;
        }
        const int cap = static_cast<int>(counts.space[static_cast<size_t>(d)].size()) - 1;
        for (int q = 0; q <= cap; ++q) {
            levels[static_cast<size_t>(d)] = q;
            rec(d + 1);
        }
    };
    rec(0);
}

void emit_block(const LevelCounts& counts, int p,
                const std::array<int, kMaxSpaceDim>& q, int dim,
                std::vector<SpaceTimeIndex>& out) {
    // all translations of the (p, q) level block, ordered deterministically
    std::array<int, kMaxSpaceDim> nx{};
    for (int d = 0; d < dim; ++d)
        nx[static_cast<size_t>(d)] =
            counts.space[static_cast<size_t>(d)][static_cast<size_t>(q[static_cast<size_t>(d)])];
    const int nt = counts.time[static_cast<size_t>(p)];
    std::array<int, kMaxSpaceDim> tr{};
    std::function<void(int, SpaceTimeIndex&)> rec = [&](int d, SpaceTimeIndex& idx) {
        if (d == dim) {
            out.push_back(idx);
            return;
        }
        for (tr[static_cast<size_t>(d)] = 0; tr[static_cast<size_t>(d)] < nx[static_cast<size_t>(d)];
             ++tr[static_cast<size_t>(d)]) {
            idx.space[static_cast<size_t>(d)] =
                WaveletIndex{q[static_cast<size_t>(d)], tr[static_cast<size_t>(d)]};
            rec(d + 1, idx);
        }
    };
    for (int kt = 0; kt < nt; ++kt) {
        SpaceTimeIndex idx;
        idx.dim = dim;
        idx.time = WaveletIndex{p, kt};
        rec(0, idx);
    }
}

}  // namespace

int sparse_b_space_budget(int k, const SparseSetParams& params) {
    // spatial budget that avoids capping the rate min(d_t - 1/2, d_x - m)
    const double rate_t = params.d_t - 0.5;
    const double rate_x = static_cast<double>(params.d_x - params.m);
    if (rate_x <= 0.0) throw std::invalid_argument("sparse_b_space_budget: d_x <= m");
    const double ratio = std::min(1.0, rate_t / rate_x);
    return static_cast<int>(std::ceil(k * ratio));
}

IndexSet build_sparse_set(int k, char rule, const SparseSetParams& params,
                          const LevelCounts& counts) {
    if (k < 0) throw std::invalid_argument("build_sparse_set: k < 0");
    if (params.n < 1 || params.n > kMaxSpaceDim)
        throw std::invalid_argument("build_sparse_set: bad spatial dimension");
    if (static_cast<int>(counts.time.size()) <= 0)
        throw std::invalid_argument("build_sparse_set: no temporal levels");
    std::vector<SpaceTimeIndex> members;

    if (rule == 'A' || rule == 'a') {
        // admissible window for the level coupling l/k
        const double lo_ratio =
            static_cast<double>(params.d_t) / (params.d_x - params.m) + params.epsilon;
        const double hi_ratio = 1.0 / static_cast<double>(params.n) - params.epsilon;
        if (!(lo_ratio <= hi_ratio)) {
            std::ostringstream os;
            os << "build_sparse_set: empty admissible window, needs d_t/(d_x-m)+eps <= "
                  "1/n-eps, got "
               << lo_ratio << " > " << hi_ratio;
            throw std::invalid_argument(os.str());
        }
        const double ratio = 0.5 * (lo_ratio + hi_ratio);
        const int l = (k == 0) ? 0 : static_cast<int>(std::floor(ratio * k));
        const int pmax = k + params.time_slack;
        for (int p = 0; p <= pmax && p < static_cast<int>(counts.time.size()); ++p) {
            const int pe = std::max(0, p - params.time_slack);
            spatial_tuples(
                counts, params.n,
                [&](const std::array<int, kMaxSpaceDim>& q) {
                    int qs = 0;
                    for (int d = 0; d < params.n; ++d) qs += q[static_cast<size_t>(d)];
                    if (params.literal_product) return qs <= l;
                    // sparse-grid coupling keeps the cardinality ~ 2^k
                    if (k == 0) return qs == 0;
                    const double lhs = static_cast<double>(pe) / k +
                                       (l == 0 ? (qs == 0 ? 0.0 : 2.0)
                                               : static_cast<double>(qs) / l);
                    return lhs <= 1.0 + 1e-12;
                },
                [&](const std::array<int, kMaxSpaceDim>& q) {
                    emit_block(counts, p, q, params.n, members);
                });
        }
        return IndexSet(IndexSetKind::sparse_a, std::move(members));
    }

    if (rule == 'B' || rule == 'b') {
        const int l = sparse_b_space_budget(k, params);
        const int pmax = k + params.time_slack;
        for (int p = 0; p <= pmax && p < static_cast<int>(counts.time.size()); ++p) {
            const int pe = std::max(0, p - params.time_slack);
            spatial_tuples(
                counts, params.n,
                [&](const std::array<int, kMaxSpaceDim>& q) {
                    int qs = 0;
                    for (int d = 0; d < params.n; ++d) qs += q[static_cast<size_t>(d)];
                    if (k == 0) return qs == 0 && p <= params.time_slack;
                    const double lhs = static_cast<double>(pe) / k +
                                       (l == 0 ? (qs == 0 ? 0.0 : 2.0)
                                               : static_cast<double>(qs) / l);
                    return lhs <= 1.0 + 1e-12;
                },
                [&](const std::array<int, kMaxSpaceDim>& q) {
                    emit_block(counts, p, q, params.n, members);
                });
        }
        return IndexSet(IndexSetKind::sparse_b, std::move(members));
    }

    throw std::invalid_argument("build_sparse_set: rule must be A or B");
}

IndexSet build_full_tensor_set(int k_t, int k_x, const LevelCounts& counts) {
    std::vector<SpaceTimeIndex> members;
    for (int p = 0; p <= k_t && p < static_cast<int>(counts.time.size()); ++p) {
        spatial_tuples(
            counts, counts.dim,
            [&](const std::array<int, kMaxSpaceDim>& q) {
                int qs = 0;
                for (int d = 0; d < counts.dim; ++d) qs += q[static_cast<size_t>(d)];
                return qs <= k_x;
            },
            [&](const std::array<int, kMaxSpaceDim>& q) {
                emit_block(counts, p, q, counts.dim, members);
            });
    }
    return IndexSet(IndexSetKind::full_tensor, std::move(members));
}

// --- coefficient vectors -----------------------------------------------------

double SparseCoeffVector::get(const SpaceTimeIndex& idx) const {
    auto it = entries_.find(idx);
    return it == entries_.end() ? 0.0 : it->second;
}

void SparseCoeffVector::set(const SpaceTimeIndex& idx, double value) {
    cache_valid_ = false;
    if (value == 0.0)
        entries_.erase(idx);
    else
        entries_[idx] = value;
}

void SparseCoeffVector::add(const SpaceTimeIndex& idx, double value) {
    if (value == 0.0) return;
    cache_valid_ = false;
    auto [it, fresh] = entries_.emplace(idx, value);
    if (!fresh) {
        it->second += value;
        if (it->second == 0.0) entries_.erase(it);
    }
}

double SparseCoeffVector::l2_norm_sq() const {
    double s = 0.0;
    for (const auto& [idx, v] : entries_) s += v * v;
    return s;
}

double SparseCoeffVector::l2_norm() const { return std::sqrt(l2_norm_sq()); }

SparseCoeffVector& SparseCoeffVector::operator+=(const SparseCoeffVector& o) {
    for (const auto& [idx, v] : o.entries_) add(idx, v);
    return *this;
}

SparseCoeffVector& SparseCoeffVector::operator-=(const SparseCoeffVector& o) {
    for (const auto& [idx, v] : o.entries_) add(idx, -v);
    return *this;
}

SparseCoeffVector& SparseCoeffVector::operator*=(double a) {
    cache_valid_ = false;
    if (a == 0.0) {
        entries_.clear();
        return *this;
    }
    for (auto& [idx, v] : entries_) v *= a;
    return *this;
}

double SparseCoeffVector::dot(const SparseCoeffVector& o) const {
    const auto& small = entries_.size() <= o.entries_.size() ? entries_ : o.entries_;
    const auto& big = entries_.size() <= o.entries_.size() ? o.entries_ : entries_;
    double s = 0.0;
    for (const auto& [idx, v] : small) {
        auto it = big.find(idx);
        if (it != big.end()) s += v * it->second;
    }
    return s;
}

const std::vector<std::pair<SpaceTimeIndex, double>>& SparseCoeffVector::sorted() const {
    if (!cache_valid_) {
        sorted_cache_.assign(entries_.begin(), entries_.end());
        std::sort(sorted_cache_.begin(), sorted_cache_.end(),
                  [](const auto& a, const auto& b) {
                      const double ma = std::abs(a.second), mb = std::abs(b.second);
                      if (ma != mb) return ma > mb;
                      return a.first < b.first;
                  });
        cache_valid_ = true;
    }
    return sorted_cache_;
}

SparseCoeffVector best_n_term(const SparseCoeffVector& v, size_t n) {
    SparseCoeffVector out;
    const auto& s = v.sorted();
    const size_t keep = std::min(n, s.size());
    for (size_t i = 0; i < keep; ++i) out.set(s[i].first, s[i].second);
    return out;
}

SparseCoeffVector truncate_to_accuracy(const SparseCoeffVector& v, double delta) {
    const auto& s = v.sorted();
    // tail_sq[i] = squared norm of entries i..end
    std::vector<double> tail_sq(s.size() + 1, 0.0);
    for (size_t i = s.size(); i-- > 0;)
        tail_sq[i] = tail_sq[i + 1] + s[i].second * s[i].second;
    size_t keep = 0;
    while (keep < s.size() && tail_sq[keep] > delta * delta) ++keep;
    SparseCoeffVector out;
    for (size_t i = 0; i < keep; ++i) out.set(s[i].first, s[i].second);
    return out;
}

double as_norm_estimate(const SparseCoeffVector& v, double s) {
    if (s <= 0.0) throw std::invalid_argument("as_norm_estimate: s must be > 0");
    const auto& sorted = v.sorted();
    if (sorted.empty()) return 0.0;
    std::vector<double> tail_sq(sorted.size() + 1, 0.0);
    for (size_t i = sorted.size(); i-- > 0;)
        tail_sq[i] = tail_sq[i + 1] + sorted[i].second * sorted[i].second;
    // sup over delta of delta * N(delta)^s is attained as delta approaches an
    // achieved error level from below: max over N >= 1 of ||v - v_{N-1}|| N^s
    double best = 0.0;
    for (size_t n = 1; n <= sorted.size(); ++n) {
        const double delta = std::sqrt(tail_sq[n - 1]);
        best = std::max(best, delta * std::pow(static_cast<double>(n), s));
    }
    return best;
}

}  // namespace pgst
