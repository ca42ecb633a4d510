#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "missboopf/error.hpp"
#include "missboopf/rngdist.hpp"

namespace missboopf {

// ----------------------------------------------------------------------------
// Training data
// ----------------------------------------------------------------------------

enum class FeatureType { Continuous, Ordinal, Nominal };

struct FeatureInfo {
    FeatureType type = FeatureType::Continuous;
    std::size_t levels = 0;  // categorical only
};

/// Column-major covariate table. Categorical features hold level indices.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<FeatureInfo> info, std::size_t rows)
        : info_(std::move(info)), rows_(rows), cols_(info_.size(), std::vector<double>(rows, 0.0)) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t features() const noexcept { return info_.size(); }
    const std::vector<FeatureInfo>& info() const noexcept { return info_; }
    const FeatureInfo& info(std::size_t f) const { return info_[f]; }

    double operator()(std::size_t i, std::size_t f) const { return cols_[f][i]; }
    double& operator()(std::size_t i, std::size_t f) { return cols_[f][i]; }
    std::span<const double> column(std::size_t f) const { return cols_[f]; }

    std::vector<double> row(std::size_t i) const {
        std::vector<double> r(features());
        for (std::size_t f = 0; f < features(); ++f) r[f] = cols_[f][i];
        return r;
    }

    FeatureMatrix select_rows(std::span<const std::size_t> idx) const {
        FeatureMatrix out(info_, idx.size());
        for (std::size_t f = 0; f < features(); ++f)
            for (std::size_t k = 0; k < idx.size(); ++k) out.cols_[f][k] = cols_[f][idx[k]];
        return out;
    }

    friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_ || a.info_.size() != b.info_.size()) return false;
        for (std::size_t f = 0; f < a.info_.size(); ++f)
            if (a.info_[f].type != b.info_[f].type || a.info_[f].levels != b.info_[f].levels) return false;
        return true;
    }

private:
    std::vector<FeatureInfo> info_;
    std::size_t rows_ = 0;
    std::vector<std::vector<double>> cols_;
};

/// Complete covariates plus a response. `response_levels == 0` marks a
/// continuous response; otherwise `y` holds level indices in [0, levels).
struct TrainSet {
    FeatureMatrix x;
    std::vector<double> y;
    std::size_t response_levels = 0;
    std::vector<double> w;  // empty means unit weights

    std::size_t rows() const noexcept { return y.size(); }
    bool categorical() const noexcept { return response_levels > 0; }
    double weight(std::size_t i) const { return w.empty() ? 1.0 : w[i]; }

    TrainSet select_rows(std::span<const std::size_t> idx) const {
        TrainSet out;
        out.x = x.select_rows(idx);
        out.response_levels = response_levels;
        out.y.reserve(idx.size());
        for (auto i : idx) out.y.push_back(y[i]);
        if (!w.empty()) {
            out.w.reserve(idx.size());
            for (auto i : idx) out.w.push_back(w[i]);
        }
        return out;
    }

    void validate() const {
        if (y.empty()) throw InvalidArgument("training set is empty");
        if (x.rows() != y.size()) throw InvalidArgument("covariate and response row counts differ");
        if (!w.empty() && w.size() != y.size()) throw InvalidArgument("weight count differs from row count");
        for (double v : y) {
            if (!std::isfinite(v)) throw InvalidArgument("non-finite response");
            if (categorical() && (v < 0 || v >= static_cast<double>(response_levels)))
                throw InvalidArgument("response level out of range");
        }
    }
};

// ----------------------------------------------------------------------------
// Tree
// ----------------------------------------------------------------------------

struct TreeParams {
    std::optional<std::size_t> mtry;  // nullopt: every feature is a candidate
    std::size_t min_node = 5;
    std::size_t max_depth = 30;

    static TreeParams regression_defaults() { return {std::nullopt, 5, 30}; }
    static TreeParams classification_defaults() { return {std::nullopt, 1, 30}; }
};

/// Binary tree stored as a flat node array. Leaves point into a flat payload
/// of width 1 (regression) or K (class probabilities).
class Tree {
public:
    static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

    struct Node {
        std::int32_t feature = -1;  // -1 for leaves
        double threshold = 0.0;     // continuous/ordinal: x <= threshold goes left
        std::vector<std::uint8_t> goes_left;  // nominal: per level
        bool heavier_left = true;   // route for levels outside goes_left
        std::uint32_t left = kNone;
        std::uint32_t right = kNone;
        std::uint32_t leaf = kNone;  // leaf ordinal

        bool is_leaf() const noexcept { return feature < 0; }
    };

    std::size_t width() const noexcept { return width_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t leaf_count() const noexcept { return width_ ? payload_.size() / width_ : 0; }
    const Node& node(std::size_t k) const { return nodes_[k]; }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }

    std::span<const double> leaf_payload(std::size_t leaf) const {
        return std::span<const double>(payload_).subspan(leaf * width_, width_);
    }
    void set_leaf_value(std::size_t leaf, double v) { payload_[leaf * width_] = v; }

    /// Index of the leaf reached by a covariate row.
    std::size_t leaf_index(std::span<const double> x) const {
        std::size_t k = 0;
        while (!nodes_[k].is_leaf()) {
            const Node& n = nodes_[k];
            k = goes_left(n, x[static_cast<std::size_t>(n.feature)]) ? n.left : n.right;
        }
        return nodes_[k].leaf;
    }

    std::size_t depth() const { return nodes_.empty() ? 0 : depth_from(0); }

    friend bool operator==(const Tree& a, const Tree& b) {
        if (a.width_ != b.width_ || a.payload_ != b.payload_ || a.nodes_.size() != b.nodes_.size()) return false;
        for (std::size_t k = 0; k < a.nodes_.size(); ++k) {
            const Node& x = a.nodes_[k];
            const Node& y = b.nodes_[k];
            if (x.feature != y.feature || x.threshold != y.threshold || x.goes_left != y.goes_left ||
                x.heavier_left != y.heavier_left || x.left != y.left || x.right != y.right || x.leaf != y.leaf)
                return false;
        }
        return true;
    }

private:
    friend class TreeBuilder;

    static bool goes_left(const Node& n, double v) {
        if (n.goes_left.empty()) return v <= n.threshold;
        auto level = static_cast<std::size_t>(v);
        if (v < 0 || level >= n.goes_left.size() || n.goes_left[level] > 1) return n.heavier_left;
        return n.goes_left[level] == 1;
    }

    std::size_t depth_from(std::size_t k) const {
        if (nodes_[k].is_leaf()) return 0;
        return 1 + std::max(depth_from(nodes_[k].left), depth_from(nodes_[k].right));
    }

    std::size_t width_ = 1;
    std::vector<Node> nodes_;
    std::vector<double> payload_;
};

inline std::span<const double> predict_tree(const Tree& t, std::span<const double> x) {
    return t.leaf_payload(t.leaf_index(x));
}

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[best]) best = k;
    return best;
}

// ----------------------------------------------------------------------------
// Split search
// ----------------------------------------------------------------------------

namespace detail {

/// `a` beats `b` by more than floating noise.
inline bool strictly_better(double a, double b) {
    if (!std::isfinite(b)) return std::isfinite(a);
    return a < b - 1e-12 * std::max(std::abs(b), 1e-300);
}

/// Sufficient statistics of a set of rows.
struct NodeStats {
    double w = 0.0;
    double s = 0.0;  // sum w*y
    double q = 0.0;  // sum w*y^2
    std::size_t count = 0;
    std::vector<double> classes;  // per-class weight (classification)

    explicit NodeStats(std::size_t k = 0) : classes(k, 0.0) {}

    void add(double y, double weight) {
        w += weight;
        ++count;
        if (classes.empty()) {
            s += weight * y;
            q += weight * y * y;
        } else {
            classes[static_cast<std::size_t>(y)] += weight;
        }
    }
    void remove(double y, double weight) {
        w -= weight;
        --count;
        if (classes.empty()) {
            s -= weight * y;
            q -= weight * y * y;
        } else {
            classes[static_cast<std::size_t>(y)] -= weight;
        }
    }
    void add(const NodeStats& o) {
        w += o.w;
        s += o.s;
        q += o.q;
        count += o.count;
        for (std::size_t k = 0; k < classes.size(); ++k) classes[k] += o.classes[k];
    }
    void remove(const NodeStats& o) {
        w -= o.w;
        s -= o.s;
        q -= o.q;
        count -= o.count;
        for (std::size_t k = 0; k < classes.size(); ++k) classes[k] -= o.classes[k];
    }

    /// Weighted impurity: sum of squares about the mean, or W * Gini.
    double impurity() const {
        if (w <= 0.0) return 0.0;
        if (classes.empty()) return std::max(0.0, q - s * s / w);
        double sq = 0.0;
        for (double c : classes) sq += c * c;
        return std::max(0.0, w - sq / w);
    }
};

struct Split {
    double score = std::numeric_limits<double>::infinity();
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::vector<std::uint8_t> goes_left;  // nominal only

    bool found() const noexcept { return feature >= 0; }
};

}  // namespace detail

/// Greedy recursive partitioning.
class TreeBuilder {
public:
    TreeBuilder(const TrainSet& ts, const TreeParams& params, SeededRng& rng)
        : ts_(ts), params_(params), rng_(rng), k_(ts.response_levels) {
        ts_.validate();
        if (params_.min_node < 1) throw InvalidArgument("min_node must be >= 1");
        if (params_.max_depth < 1) throw InvalidArgument("max_depth must be >= 1");
        const std::size_t p = ts_.x.features();
        mtry_ = params_.mtry.value_or(p);
        if (p > 0 && (mtry_ < 1 || mtry_ > p)) throw InvalidArgument("mtry must lie in [1, number of features]");
        tree_.width_ = k_ ? k_ : 1;
        all_features_.resize(p);
        std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
    }

    Tree build() {
        std::vector<std::size_t> rows(ts_.rows());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        grow(rows, 0);
        return std::move(tree_);
    }

private:
    detail::NodeStats stats_of(std::span<const std::size_t> rows) const {
        detail::NodeStats st(k_);
        for (auto i : rows) st.add(ts_.y[i], ts_.weight(i));
        return st;
    }

    bool pure(std::span<const std::size_t> rows, const detail::NodeStats& st) const {
        if (k_) {
            std::size_t nonzero = 0;
            for (double c : st.classes) nonzero += c > 0.0;
            return nonzero <= 1;
        }
        auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                            [&](std::size_t a, std::size_t b) { return ts_.y[a] < ts_.y[b]; });
        return ts_.y[*lo] == ts_.y[*hi];
    }

    std::uint32_t make_leaf(const detail::NodeStats& st) {
        Tree::Node n;
        n.leaf = static_cast<std::uint32_t>(tree_.leaf_count());
        if (k_) {
            for (double c : st.classes) tree_.payload_.push_back(st.w > 0 ? c / st.w : 1.0 / static_cast<double>(k_));
        } else {
            tree_.payload_.push_back(st.w > 0 ? st.s / st.w : 0.0);
        }
        tree_.nodes_.push_back(std::move(n));
        return static_cast<std::uint32_t>(tree_.nodes_.size() - 1);
    }

    std::vector<std::size_t> draw_features() {
        std::vector<std::size_t> f = all_features_;
        if (mtry_ < f.size()) {
            for (std::size_t k = 0; k < mtry_; ++k) std::swap(f[k], f[k + rng_.index(f.size() - k)]);
            f.resize(mtry_);
            std::sort(f.begin(), f.end());
        }
        return f;
    }

    std::uint32_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
        const auto st = stats_of(rows);
        const double parent = st.impurity();
        if (rows.size() < 2 * params_.min_node || depth >= params_.max_depth || all_features_.empty() ||
            pure(rows, st) || parent <= 0.0)
            return make_leaf(st);

        detail::Split best;
        for (auto f : draw_features()) {
            detail::Split cand = ts_.x.info(f).type == FeatureType::Nominal ? best_nominal(rows, f, st)
                                                                           : best_ordered(rows, f);
            if (cand.found() && detail::strictly_better(cand.score, best.score)) best = std::move(cand);
        }
        if (!best.found() || !detail::strictly_better(best.score, parent)) return make_leaf(st);

        std::vector<std::size_t> left_rows, right_rows;
        Tree::Node node;
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.goes_left = std::move(best.goes_left);
        const auto col = ts_.x.column(static_cast<std::size_t>(best.feature));
        double wl = 0.0, wr = 0.0;
        for (auto i : rows) {
            bool left = node.goes_left.empty() ? col[i] <= node.threshold
                                               : node.goes_left[static_cast<std::size_t>(col[i])] == 1;
            (left ? left_rows : right_rows).push_back(i);
            (left ? wl : wr) += ts_.weight(i);
        }
        node.heavier_left = wl >= wr;
        // Levels absent from this node follow the heavier child.
        for (auto& g : node.goes_left)
            if (g > 1) g = node.heavier_left ? 1 : 0;

        rows.clear();
        rows.shrink_to_fit();
        const auto self = static_cast<std::uint32_t>(tree_.nodes_.size());
        tree_.nodes_.push_back(std::move(node));
        const auto l = grow(left_rows, depth + 1);
        const auto r = grow(right_rows, depth + 1);
        tree_.nodes_[self].left = l;
        tree_.nodes_[self].right = r;
        return self;
    }

    /// Thresholds at midpoints between consecutive distinct sorted values.
    detail::Split best_ordered(std::span<const std::size_t> rows, std::size_t f) const {
        const auto col = ts_.x.column(f);
        std::vector<std::size_t> order(rows.begin(), rows.end());
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return col[a] < col[b] || (col[a] == col[b] && a < b);
        });
        detail::NodeStats left(k_), right = stats_of(rows);
        detail::Split best;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            const auto i = order[k];
            left.add(ts_.y[i], ts_.weight(i));
            right.remove(ts_.y[i], ts_.weight(i));
            const double a = col[i];
            const double b = col[order[k + 1]];
            if (a == b) continue;
            if (left.count < params_.min_node || right.count < params_.min_node) continue;
            const double score = left.impurity() + right.impurity();
            if (detail::strictly_better(score, best.score)) {
                best.score = score;
                best.feature = static_cast<std::int32_t>(f);
                best.threshold = a + (b - a) / 2.0;
            }
        }
        return best;
    }

    /// Exhaustive subset search for up to 10 present levels; above that,
    /// levels are ordered by mean response (regression) or by the share of
    /// response level 1 (classification) and split like an ordered feature.
    detail::Split best_nominal(std::span<const std::size_t> rows, std::size_t f, const detail::NodeStats& total) const {
        const auto col = ts_.x.column(f);
        const std::size_t levels = ts_.x.info(f).levels;
        std::vector<detail::NodeStats> per(levels, detail::NodeStats(k_));
        for (auto i : rows) per[static_cast<std::size_t>(col[i])].add(ts_.y[i], ts_.weight(i));
        std::vector<std::size_t> present;
        for (std::size_t l = 0; l < levels; ++l)
            if (per[l].count > 0) present.push_back(l);
        detail::Split best;
        if (present.size() < 2) return best;

        auto consider = [&](const detail::NodeStats& left, const std::vector<std::size_t>& left_levels) {
            detail::NodeStats right = total;
            right.remove(left);
            if (left.count < params_.min_node || right.count < params_.min_node) return;
            const double score = left.impurity() + right.impurity();
            if (!detail::strictly_better(score, best.score)) return;
            best.score = score;
            best.feature = static_cast<std::int32_t>(f);
            best.goes_left.assign(levels, 2);  // 2: not seen in this node
            for (auto l : present) best.goes_left[l] = 0;
            for (auto l : left_levels) best.goes_left[l] = 1;
        };

        if (present.size() <= 10) {
            // The lowest present level always goes left; the remaining levels
            // are enumerated as a bitmask in ascending order.
            const std::size_t rest = present.size() - 1;
            const std::uint32_t full = (1u << rest) - 1u;
            std::vector<std::size_t> left_levels;
            for (std::uint32_t mask = 0; mask < full; ++mask) {
                detail::NodeStats left = per[present[0]];
                left_levels.assign(1, present[0]);
                for (std::size_t b = 0; b < rest; ++b)
                    if (mask & (1u << b)) {
                        left.add(per[present[b + 1]]);
                        left_levels.push_back(present[b + 1]);
                    }
                consider(left, left_levels);
            }
            return best;
        }

        auto key = [&](std::size_t l) {
            const auto& s = per[l];
            if (!k_) return s.s / s.w;
            return k_ > 1 ? s.classes[1] / s.w : 0.0;
        };
        std::vector<std::size_t> order = present;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
        detail::NodeStats left(k_);
        std::vector<std::size_t> left_levels;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            left.add(per[order[k]]);
            left_levels.push_back(order[k]);
            consider(left, left_levels);
        }
        return best;
    }

    const TrainSet& ts_;
    TreeParams params_;
    SeededRng& rng_;
    std::size_t k_;
    std::size_t mtry_ = 0;
    std::vector<std::size_t> all_features_;
    Tree tree_;
};

/// Fits one CART tree: variance reduction for a continuous response, Gini
/// for a categorical one. Each node draws `mtry` candidate features without
/// replacement. Equal-impurity splits keep the lowest feature index, then
/// the lowest threshold or first-enumerated level subset.
inline Tree fit_tree(const TrainSet& ts, const TreeParams& params, SeededRng& rng) {
    return TreeBuilder(ts, params, rng).build();
}

}  // namespace missboopf
