#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "larf/dataset.hpp"
#include "larf/errors.hpp"
#include "larf/rng.hpp"
#include "larf/threading.hpp"

namespace larf {

enum class ForestKind { RF, ERT };

inline std::string to_string(ForestKind k) { return k == ForestKind::RF ? "rf" : "ert"; }

inline ForestKind forest_kind_from_string(const std::string& s) {
    if (s == "rf") return ForestKind::RF;
    if (s == "ert") return ForestKind::ERT;
    throw InvalidSpec("unknown forest kind: " + s + " (expected rf|ert)");
}

struct ForestConfig {
    std::size_t n_trees = 100;
    ForestKind kind = ForestKind::RF;
    std::size_t min_leaf_size = 10;
    int max_depth = -1;             // -1: unlimited
    std::size_t features_per_split = 0; // 0: all features
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (n_trees < 1) throw InvalidConfig("n_trees must be >= 1");
        if (min_leaf_size < 1) throw InvalidConfig("min_leaf_size must be >= 1");
        if (max_depth == 0 || max_depth < -1) throw InvalidConfig("max_depth must be -1 (unlimited) or >= 1");
    }
};

// Flat node storage; a node is a leaf iff feature < 0. Leaf members are the
// full-training-set rows routed to it, sorted ascending.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double mean_target = 0.0;
    std::vector<std::uint32_t> members;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    int leaf_index(const Eigen::Ref<const Vector>& x) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const TreeNode& nd = nodes[static_cast<std::size_t>(i)];
            i = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
        return i;
    }

    std::size_t n_leaves() const {
        std::size_t c = 0;
        for (const auto& nd : nodes) c += nd.is_leaf() ? 1 : 0;
        return c;
    }
};

struct Forest {
    std::vector<Tree> trees;
    ForestKind kind = ForestKind::RF;
    std::size_t min_leaf_size = 10;
    std::uint64_t rng_seed = 0;
    std::size_t n_features = 0;
    std::size_t n_train_rows = 0;
    ForestConfig config;

    std::size_t n_trees() const { return trees.size(); }

    void check_dimension(const Eigen::Ref<const Vector>& x) const {
        if (static_cast<std::size_t>(x.size()) != n_features)
            throw DimensionMismatch("expected " + std::to_string(n_features) + " features, got " +
                                    std::to_string(x.size()));
    }
};

namespace detail {

inline Rng tree_rng(std::uint64_t seed, std::size_t tree_index) {
    return Rng(mix_seed(seed, 0x7ee5ULL + tree_index));
}

inline std::vector<std::uint32_t> bootstrap_sample(Rng& rng, std::size_t n) {
    std::vector<std::uint32_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(rng.below(n));
    return idx;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

inline double midpoint(double lo, double hi) { return lo + 0.5 * (hi - lo); }

struct TreeBuilder {
    const Dataset& data;
    const ForestConfig& cfg;
    Rng rng;
    Tree tree;

    TreeBuilder(const Dataset& d, const ForestConfig& c, Rng r) : data(d), cfg(c), rng(r) {}

    // Sum of squared errors around the mean, via sums: sse = sum(y^2) - (sum y)^2 / n.
    static double sse(double sum, double sum_sq, double count) {
        if (count <= 0.0) return 0.0;
        const double s = sum_sq - sum * sum / count;
        return s > 0.0 ? s : 0.0;
    }

    std::vector<int> pick_features() {
        const auto m = data.n_features();
        std::vector<int> feats(m);
        std::iota(feats.begin(), feats.end(), 0);
        if (cfg.features_per_split == 0 || cfg.features_per_split >= m) return feats;
        // partial Fisher-Yates, then sorted so evaluation order is by feature index
        for (std::size_t i = 0; i < cfg.features_per_split; ++i)
            std::swap(feats[i], feats[i + rng.below(m - i)]);
        feats.resize(cfg.features_per_split);
        std::sort(feats.begin(), feats.end());
        return feats;
    }

    // Number of rows in `rows` with feature value <= t.
    std::size_t count_below(const std::vector<std::uint32_t>& rows, int f, double t) const {
        std::size_t c = 0;
        for (auto r : rows) c += data.features(r, f) <= t ? 1 : 0;
        return c;
    }

    // Best variance-reduction split on the bootstrap rows, admissible w.r.t.
    // the full-set member floor. Ties: lower feature index, lower threshold
    // (strict > comparisons with features scanned in ascending order).
    SplitChoice best_split(const std::vector<std::uint32_t>& boot,
                           const std::vector<std::uint32_t>& full) {
        SplitChoice best;
        const auto feats = pick_features();
        std::vector<std::pair<double, double>> vals(boot.size()); // (feature value, target)

        for (int f : feats) {
            for (std::size_t i = 0; i < boot.size(); ++i)
                vals[i] = {data.features(boot[i], f), data.targets(boot[i])};
            std::sort(vals.begin(), vals.end());
            const double vmin = vals.front().first, vmax = vals.back().first;
            if (vmin == vmax) continue;

            double total_sum = 0.0, total_sq = 0.0;
            for (const auto& [v, y] : vals) {
                total_sum += y;
                total_sq += y * y;
            }
            const double parent_sse = sse(total_sum, total_sq, static_cast<double>(vals.size()));

            if (cfg.kind == ForestKind::ERT) {
                const double t = rng.uniform(vmin, vmax);
                double lsum = 0.0, lsq = 0.0;
                std::size_t lcount = 0;
                for (const auto& [v, y] : vals) {
                    if (v <= t) {
                        lsum += y;
                        lsq += y * y;
                        ++lcount;
                    }
                }
                if (lcount == 0 || lcount == vals.size()) continue;
                const double gain = parent_sse -
                                    sse(lsum, lsq, static_cast<double>(lcount)) -
                                    sse(total_sum - lsum, total_sq - lsq,
                                        static_cast<double>(vals.size() - lcount));
                if (gain > best.gain && admissible(full, f, t)) best = {f, t, gain};
            } else {
                double lsum = 0.0, lsq = 0.0;
                for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                    lsum += vals[i].second;
                    lsq += vals[i].second * vals[i].second;
                    if (vals[i].first == vals[i + 1].first) continue;
                    const double t = midpoint(vals[i].first, vals[i + 1].first);
                    const double gain = parent_sse -
                                        sse(lsum, lsq, static_cast<double>(i + 1)) -
                                        sse(total_sum - lsum, total_sq - lsq,
                                            static_cast<double>(vals.size() - i - 1));
                    if (gain > best.gain && admissible(full, f, t)) best = {f, t, gain};
                }
            }
        }
        return best;
    }

    bool admissible(const std::vector<std::uint32_t>& full, int f, double t) const {
        const std::size_t left = count_below(full, f, t);
        return left >= cfg.min_leaf_size && full.size() - left >= cfg.min_leaf_size;
    }

    int build(const std::vector<std::uint32_t>& boot, std::vector<std::uint32_t> full, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        SplitChoice choice;
        const bool can_split = full.size() >= 2 * cfg.min_leaf_size && boot.size() >= 2 &&
                               (cfg.max_depth < 0 || depth < cfg.max_depth);
        if (can_split) choice = best_split(boot, full);

        if (choice.feature < 0 || choice.gain <= 0.0) {
            TreeNode& leaf = tree.nodes[static_cast<std::size_t>(id)];
            double sum = 0.0;
            for (auto r : full) sum += data.targets(r);
            std::sort(full.begin(), full.end());
            leaf.mean_target = sum / static_cast<double>(full.size());
            leaf.members = std::move(full);
            return id;
        }

        std::vector<std::uint32_t> boot_l, boot_r, full_l, full_r;
        for (auto r : boot)
            (data.features(r, choice.feature) <= choice.threshold ? boot_l : boot_r).push_back(r);
        for (auto r : full)
            (data.features(r, choice.feature) <= choice.threshold ? full_l : full_r).push_back(r);

        const int left = build(boot_l, std::move(full_l), depth + 1);
        const int right = build(boot_r, std::move(full_r), depth + 1);
        TreeNode& nd = tree.nodes[static_cast<std::size_t>(id)];
        nd.feature = choice.feature;
        nd.threshold = choice.threshold;
        nd.left = left;
        nd.right = right;
        return id;
    }
};

inline Tree fit_tree(const Dataset& data, const ForestConfig& cfg, std::size_t tree_index) {
    Rng rng = tree_rng(cfg.rng_seed, tree_index);
    auto boot = bootstrap_sample(rng, data.n_rows());
    std::vector<std::uint32_t> full(data.n_rows());
    std::iota(full.begin(), full.end(), 0u);
    TreeBuilder builder(data, cfg, rng);
    builder.build(boot, std::move(full), 0);
    return std::move(builder.tree);
}

} // namespace detail

// Fits a bagged ensemble. Split gain is evaluated on the bootstrap sample;
// the member floor and the stored leaf statistics use the full training set
// routed through the finished structure, so every leaf carries at least
// min_leaf_size usable rows. Per-tree RNG streams depend only on
// (rng_seed, tree index): parallel and serial builds are identical.
inline Forest fit_forest(const Dataset& data, const ForestConfig& config, int n_threads = 1) {
    config.validate();
    data.validate();
    if (data.n_rows() < 2 * config.min_leaf_size)
        throw EmptyDataset("need at least 2*min_leaf_size = " +
                           std::to_string(2 * config.min_leaf_size) + " rows, got " +
                           std::to_string(data.n_rows()));

    Forest forest;
    forest.kind = config.kind;
    forest.min_leaf_size = config.min_leaf_size;
    forest.rng_seed = config.rng_seed;
    forest.n_features = data.n_features();
    forest.n_train_rows = data.n_rows();
    forest.config = config;
    forest.trees.resize(config.n_trees);
    parallel_for(config.n_trees, n_threads,
                 [&](std::size_t t) { forest.trees[t] = detail::fit_tree(data, config, t); });
    return forest;
}

// Index set of training rows sharing the leaf that x reaches in tree k.
inline const std::vector<std::uint32_t>& leaf_members(const Forest& forest, std::size_t tree_index,
                                                      const Eigen::Ref<const Vector>& x) {
    forest.check_dimension(x);
    const Tree& tree = forest.trees.at(tree_index);
    return tree.nodes[static_cast<std::size_t>(tree.leaf_index(x))].members;
}

// Plain ensemble prediction: average of reached-leaf target means.
inline double predict_baseline(const Forest& forest, const Eigen::Ref<const Vector>& x) {
    forest.check_dimension(x);
    double sum = 0.0;
    for (const Tree& tree : forest.trees)
        sum += tree.nodes[static_cast<std::size_t>(tree.leaf_index(x))].mean_target;
    return sum / static_cast<double>(forest.trees.size());
}

} // namespace larf
