#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "missboopf/cart.hpp"
#include "missboopf/error.hpp"
#include "missboopf/rngdist.hpp"

namespace missboopf {

enum class Loss { Squared, Bernoulli, Multinomial };

struct GbmParams {
    std::size_t iterations = 2000;
    double step = 0.001;
    double fraction = 0.5;
    TreeParams tree{std::nullopt, 10, 4};
    std::optional<Loss> loss;  // default: Squared / Bernoulli (2 levels) / Multinomial
};

namespace gbm {

inline double sigmoid(double f) {
    return f >= 0 ? 1.0 / (1.0 + std::exp(-f)) : std::exp(f) / (1.0 + std::exp(f));
}

inline std::vector<double> softmax(std::span<const double> f) {
    const double top = *std::max_element(f.begin(), f.end());
    std::vector<double> p(f.size());
    double total = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) total += (p[k] = std::exp(f[k] - top));
    for (double& v : p) v /= total;
    return p;
}

/// Loss of one observation. Scores hold 1 entry (Squared, Bernoulli: the
/// log-odds of level 1) or K entries (Multinomial).
inline double loss_value(Loss loss, double y, std::span<const double> scores) {
    switch (loss) {
        case Loss::Squared: return 0.5 * (y - scores[0]) * (y - scores[0]);
        case Loss::Bernoulli: {
            const double f = scores[0];
            // log(1 + e^f) without overflow
            const double softplus = f > 0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
            return softplus - y * f;
        }
        case Loss::Multinomial: {
            const double top = *std::max_element(scores.begin(), scores.end());
            double total = 0.0;
            for (double s : scores) total += std::exp(s - top);
            return top + std::log(total) - scores[static_cast<std::size_t>(y)];
        }
    }
    return 0.0;
}

/// Negative gradient of loss_value with respect to the scores.
inline std::vector<double> pseudo_residuals(Loss loss, double y, std::span<const double> scores) {
    switch (loss) {
        case Loss::Squared: return {y - scores[0]};
        case Loss::Bernoulli: return {y - sigmoid(scores[0])};
        case Loss::Multinomial: {
            auto p = softmax(scores);
            for (std::size_t k = 0; k < p.size(); ++k) p[k] = (k == static_cast<std::size_t>(y) ? 1.0 : 0.0) - p[k];
            return p;
        }
    }
    return {};
}

}  // namespace gbm

/// Additive tree model. Leaf values of the stored trees are already
/// multiplied by the step size.
class GbmModel {
public:
    GbmModel(Loss loss, std::size_t response_levels, std::vector<double> initial)
        : loss_(loss), response_levels_(response_levels), initial_(std::move(initial)) {}

    Loss loss() const noexcept { return loss_; }
    std::size_t response_levels() const noexcept { return response_levels_; }
    bool categorical() const noexcept { return loss_ != Loss::Squared; }
    const std::vector<double>& initial() const noexcept { return initial_; }
    std::size_t iterations() const noexcept { return stages_.size(); }
    const std::vector<std::vector<Tree>>& stages() const noexcept { return stages_; }

    void add_stage(std::vector<Tree> trees) { stages_.push_back(std::move(trees)); }

    /// Raw scores F(x).
    std::vector<double> scores(std::span<const double> x) const {
        std::vector<double> f = initial_;
        for (const auto& stage : stages_)
            for (std::size_t k = 0; k < stage.size(); ++k) f[k] += predict_tree(stage[k], x)[0];
        return f;
    }

    std::vector<double> class_probabilities(std::span<const double> x) const {
        auto f = scores(x);
        if (loss_ == Loss::Bernoulli) {
            const double p1 = gbm::sigmoid(f[0]);
            return {1.0 - p1, p1};
        }
        return gbm::softmax(f);
    }

private:
    Loss loss_;
    std::size_t response_levels_;
    std::vector<double> initial_;
    std::vector<std::vector<Tree>> stages_;
};

namespace gbm {

inline Loss default_loss(std::size_t response_levels) {
    if (response_levels == 0) return Loss::Squared;
    return response_levels == 2 ? Loss::Bernoulli : Loss::Multinomial;
}

inline void check_loss(Loss loss, std::size_t levels) {
    const bool ok = (loss == Loss::Squared && levels == 0) || (loss == Loss::Bernoulli && levels == 2) ||
                    (loss == Loss::Multinomial && levels >= 1);
    if (!ok) throw InvalidArgument("loss does not match the response kind");
}

inline double total_loss(Loss loss, const TrainSet& ts, const std::vector<std::vector<double>>& scores) {
    double total = 0.0;
    for (std::size_t i = 0; i < ts.rows(); ++i) total += ts.weight(i) * loss_value(loss, ts.y[i], scores[i]);
    return total;
}

}  // namespace gbm

/// Called after every iteration with (iteration, training loss on all rows).
using GbmObserver = std::function<void(std::size_t, double)>;

/// Stochastic gradient tree boosting. Each iteration fits a regression tree
/// per score to the pseudo-residuals of a without-replacement subsample and
/// sets every leaf to one Newton step of the loss, scaled by `step`.
inline GbmModel fit_gbm(const TrainSet& ts, const GbmParams& params, SeededRng& rng,
                        const GbmObserver& observer = {}) {
    ts.validate();
    if (!(params.step > 0.0)) throw InvalidArgument("step size must be positive");
    if (!(params.fraction > 0.0 && params.fraction <= 1.0)) throw InvalidArgument("subsample fraction must lie in (0, 1]");
    const Loss loss = params.loss.value_or(gbm::default_loss(ts.response_levels));
    gbm::check_loss(loss, ts.response_levels);

    const std::size_t n = ts.rows();
    const std::size_t k_scores = loss == Loss::Multinomial ? ts.response_levels : 1;

    std::vector<double> initial(k_scores, 0.0);
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) wsum += ts.weight(i);
    if (loss == Loss::Squared) {
        for (std::size_t i = 0; i < n; ++i) initial[0] += ts.weight(i) * ts.y[i];
        initial[0] /= wsum;
    } else {
        std::vector<double> freq(ts.response_levels, 0.0);
        for (std::size_t i = 0; i < n; ++i) freq[static_cast<std::size_t>(ts.y[i])] += ts.weight(i);
        constexpr double floor = 1e-10;
        if (loss == Loss::Bernoulli) {
            const double p1 = std::clamp(freq[1] / wsum, floor, 1.0 - floor);
            initial[0] = std::log(p1 / (1.0 - p1));
        } else {
            for (std::size_t k = 0; k < k_scores; ++k) initial[k] = std::log(std::max(freq[k] / wsum, floor));
        }
    }
    GbmModel model(loss, ts.response_levels, initial);
    if (k_scores == 1 && loss == Loss::Multinomial) return model;

    std::vector<std::vector<double>> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = ts.x.row(i);
    std::vector<std::vector<double>> scores(n, initial);

    const auto sub_n = std::min(n, static_cast<std::size_t>(std::ceil(params.fraction * static_cast<double>(n))));
    std::vector<std::size_t> perm(n);
    std::vector<std::vector<double>> residuals(n);

    for (std::size_t iter = 0; iter < params.iterations; ++iter) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t j = 0; j < sub_n; ++j) std::swap(perm[j], perm[j + rng.index(n - j)]);
        std::vector<std::size_t> sub(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sub_n));
        std::sort(sub.begin(), sub.end());

        for (auto i : sub) residuals[i] = gbm::pseudo_residuals(loss, ts.y[i], scores[i]);
        TrainSet fit_set = ts.select_rows(sub);
        fit_set.response_levels = 0;

        std::vector<Tree> stage;
        stage.reserve(k_scores);
        for (std::size_t k = 0; k < k_scores; ++k) {
            for (std::size_t s = 0; s < sub_n; ++s) fit_set.y[s] = residuals[sub[s]][k];
            Tree tree = fit_tree(fit_set, params.tree, rng);

            std::vector<double> num(tree.leaf_count(), 0.0), den(tree.leaf_count(), 0.0);
            for (auto i : sub) {
                const auto leaf = tree.leaf_index(rows[i]);
                const double r = residuals[i][k];
                const double w = ts.weight(i);
                num[leaf] += w * r;
                switch (loss) {
                    case Loss::Squared: den[leaf] += w; break;
                    case Loss::Bernoulli: {
                        const double p = ts.y[i] - r;
                        den[leaf] += w * p * (1.0 - p);
                        break;
                    }
                    case Loss::Multinomial: den[leaf] += w * std::abs(r) * (1.0 - std::abs(r)); break;
                }
            }
            const double scale = loss == Loss::Multinomial
                                     ? static_cast<double>(k_scores - 1) / static_cast<double>(k_scores)
                                     : 1.0;
            for (std::size_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
                const double newton = den[leaf] > 1e-12 ? scale * num[leaf] / den[leaf] : 0.0;
                tree.set_leaf_value(leaf, params.step * newton);
            }
            for (std::size_t i = 0; i < n; ++i) scores[i][k] += predict_tree(tree, rows[i])[0];
            stage.push_back(std::move(tree));
        }
        model.add_stage(std::move(stage));
        if (observer) observer(iter, gbm::total_loss(loss, ts, scores));
    }
    return model;
}

/// Continuous response: F(x). Categorical: level with the highest score
/// (ties to the lowest level index).
inline double predict_gbm(const GbmModel& m, std::span<const double> x) {
    auto f = m.scores(x);
    switch (m.loss()) {
        case Loss::Squared: return f[0];
        case Loss::Bernoulli: return f[0] > 0.0 ? 1.0 : 0.0;
        case Loss::Multinomial: return static_cast<double>(argmax(f));
    }
    return 0.0;
}

}  // namespace missboopf
