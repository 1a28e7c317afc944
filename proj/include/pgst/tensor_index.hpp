#ifndef PGST_TENSOR_INDEX_HPP
#define PGST_TENSOR_INDEX_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pgst/interval_basis.hpp"

namespace pgst {

inline constexpr int kMaxSpaceDim = 3;

// tensorized space-time index: one temporal and n spatial wavelet indices
struct SpaceTimeIndex {
    WaveletIndex time;
    std::array<WaveletIndex, kMaxSpaceDim> space{};
    int dim = 1;

    int space_level_sum() const {
        int s = 0;
        for (int i = 0; i < dim; ++i) s += space[static_cast<size_t>(i)].level;
        return s;
    }
    bool operator==(const SpaceTimeIndex& o) const {
        if (dim != o.dim || time != o.time) return false;
        for (int i = 0; i < dim; ++i)
            if (space[static_cast<size_t>(i)] != o.space[static_cast<size_t>(i)]) return false;
        return true;
    }
    // lexicographic on (time.level, time.translation, space...)
    bool operator<(const SpaceTimeIndex& o) const;

    std::string to_line() const;  // "t:<level>,<k> x:<level>,<k>[;...]"
    static SpaceTimeIndex from_line(const std::string& line);
};

struct SpaceTimeIndexHash {
    size_t operator()(const SpaceTimeIndex& i) const;
};

enum class IndexSetKind { sparse_a, sparse_b, full_tensor, adaptive };

// finite, level-structured set of space-time indices
class IndexSet {
  public:
    IndexSet() = default;
    IndexSet(IndexSetKind kind, std::vector<SpaceTimeIndex> members);

    IndexSetKind kind() const { return kind_; }
    size_t size() const { return members_.size(); }
    const std::vector<SpaceTimeIndex>& members() const { return members_; }
    const SpaceTimeIndex& operator[](size_t i) const { return members_[i]; }
    bool contains(const SpaceTimeIndex& idx) const;
    int position(const SpaceTimeIndex& idx) const;  // -1 if absent

    void write_lines(std::ostream& os) const;
    static IndexSet read_lines(std::istream& is, IndexSetKind kind);

  private:
    IndexSetKind kind_ = IndexSetKind::adaptive;
    std::vector<SpaceTimeIndex> members_;
    std::unordered_map<SpaceTimeIndex, int, SpaceTimeIndexHash> lookup_;
};

// per-level function counts of the participating 1d bases
struct LevelCounts {
    std::vector<int> time;                        // count per temporal level
    std::array<std::vector<int>, kMaxSpaceDim> space;
    int dim = 1;
};

struct SparseSetParams {
    int d_t = 2;
    int d_x = 2;
    int m = 1;
    int n = 1;           // spatial dimension
    double epsilon = 0.05;
    bool literal_product = false;  // rule A: full anisotropic product (comparison mode)
    // temporal over-testing: include time levels up to `time_slack` beyond the
    // coupling inequality (used for test-side sets; the time derivative maps
    // trial content one level up, so the matched test set must reach it)
    int time_slack = 0;
};

// level-block sparse tensor sets; rule A couples l/k inside the admissible
// window, rule B uses the weighted sparse-grid inequality p/k + (sum q)/l <= 1
IndexSet build_sparse_set(int k, char rule, const SparseSetParams& params,
                          const LevelCounts& counts);

// full anisotropic product p <= k_t, sum(q) <= k_x
IndexSet build_full_tensor_set(int k_t, int k_x, const LevelCounts& counts);

// the rule-B spatial level budget for a given k (exposed for the harness)
int sparse_b_space_budget(int k, const SparseSetParams& params);

// finitely supported coefficient vector over space-time indices
class SparseCoeffVector {
  public:
    SparseCoeffVector() = default;

    double get(const SpaceTimeIndex& idx) const;
    void set(const SpaceTimeIndex& idx, double value);  // value 0 erases
    void add(const SpaceTimeIndex& idx, double value);
    size_t support_size() const { return entries_.size(); }
    const std::unordered_map<SpaceTimeIndex, double, SpaceTimeIndexHash>& entries() const {
        return entries_;
    }

    double l2_norm_sq() const;
    double l2_norm() const;
    SparseCoeffVector& operator+=(const SparseCoeffVector& o);
    SparseCoeffVector& operator-=(const SparseCoeffVector& o);
    SparseCoeffVector& operator*=(double a);
    double dot(const SparseCoeffVector& o) const;

    // entries in decreasing |value|, ties by index order (cached)
    const std::vector<std::pair<SpaceTimeIndex, double>>& sorted() const;

  private:
    std::unordered_map<SpaceTimeIndex, double, SpaceTimeIndexHash> entries_;
    mutable std::vector<std::pair<SpaceTimeIndex, double>> sorted_cache_;
    mutable bool cache_valid_ = false;
};

// keep the N largest-magnitude entries (deterministic tie-breaking)
SparseCoeffVector best_n_term(const SparseCoeffVector& v, size_t n);

// smallest support size achieving accuracy delta, and the matching truncation
SparseCoeffVector truncate_to_accuracy(const SparseCoeffVector& v, double delta);

// sup over achieved error levels delta of delta * N(delta)^s
double as_norm_estimate(const SparseCoeffVector& v, double s);

}  // namespace pgst

#endif
