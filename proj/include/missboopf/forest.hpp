#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "missboopf/cart.hpp"
#include "missboopf/parallel.hpp"
#include "missboopf/resampling.hpp"
#include "missboopf/rngdist.hpp"

namespace missboopf {

struct ForestParams {
    std::size_t trees = 100;
    std::optional<std::size_t> mtry;  // default: ceil(sqrt(number of covariates))
    std::optional<TreeParams> tree;   // default: regression/classification defaults
    ResamplerKind resampler = resampler::SimpleWithReplacement{};
    std::size_t threads = 1;
};

class ForestModel {
public:
    ForestModel(std::vector<Tree> trees, std::size_t response_levels, std::vector<FeatureInfo> features)
        : trees_(std::move(trees)), response_levels_(response_levels), features_(std::move(features)) {}

    const std::vector<Tree>& trees() const noexcept { return trees_; }
    std::size_t response_levels() const noexcept { return response_levels_; }
    bool categorical() const noexcept { return response_levels_ > 0; }
    const std::vector<FeatureInfo>& features() const noexcept { return features_; }

    friend bool operator==(const ForestModel& a, const ForestModel& b) {
        return a.response_levels_ == b.response_levels_ && a.trees_ == b.trees_;
    }

private:
    std::vector<Tree> trees_;
    std::size_t response_levels_;
    std::vector<FeatureInfo> features_;
};

inline std::size_t default_mtry(std::size_t features) {
    if (features == 0) return 1;
    auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(features))));
    return std::clamp<std::size_t>(m, 1, features);
}

/// Tree b is trained on resample(ts) drawn from its own stream (seed, b), so
/// the model does not depend on how the B fits are scheduled.
inline ForestModel fit_forest(const TrainSet& ts, const ForestParams& params, SeededRng& rng) {
    if (params.trees < 1) throw InvalidArgument("forest needs at least one tree");
    ts.validate();
    TreeParams tp = params.tree.value_or(ts.categorical() ? TreeParams::classification_defaults()
                                                          : TreeParams::regression_defaults());
    if (ts.x.features() > 0) tp.mtry = params.mtry.value_or(default_mtry(ts.x.features()));
    const std::uint64_t master = rng.next_seed();
    std::vector<Tree> trees(params.trees);
    parallel_for(params.trees, params.threads, [&](std::size_t b) {
        SeededRng tree_rng(master, "forest-tree", {b});
        TrainSet sample = resample(ts, params.resampler, tree_rng);
        trees[b] = fit_tree(sample, tp, tree_rng);
    });
    return ForestModel(std::move(trees), ts.response_levels, ts.x.info());
}

/// Mean of the tree predictions, or the most frequent per-tree argmax class
/// (vote ties to the lowest level index).
inline double predict_forest(const ForestModel& m, std::span<const double> x) {
    if (!m.categorical()) {
        double sum = 0.0;
        for (const auto& t : m.trees()) sum += predict_tree(t, x)[0];
        return sum / static_cast<double>(m.trees().size());
    }
    std::vector<std::size_t> votes(m.response_levels(), 0);
    for (const auto& t : m.trees()) ++votes[argmax(predict_tree(t, x))];
    return static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

}  // namespace missboopf
