#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "missboopf/boosting.hpp"
#include "missboopf/cart.hpp"
#include "missboopf/datamodel.hpp"
#include "missboopf/error.hpp"
#include "missboopf/forest.hpp"
#include "missboopf/resampling.hpp"

namespace missboopf {

// ----------------------------------------------------------------------------
// Learners
// ----------------------------------------------------------------------------

/// Anything that can be trained on the observed rows of one column and then
/// predict that column on the query rows. Predictions are real values, or
/// level indices for a categorical response.
class ColumnLearner {
public:
    virtual ~ColumnLearner() = default;
    virtual std::vector<double> fit_predict(const TrainSet& train, const FeatureMatrix& query,
                                            SeededRng& rng) const = 0;
    /// Throws InvalidArgument if the learner cannot model column `target`.
    virtual void check_compatible(const Schema&, std::size_t /*target*/) const {}
    virtual std::string name() const = 0;
};

class ForestLearner final : public ColumnLearner {
public:
    explicit ForestLearner(ForestParams params) : params_(std::move(params)) {}

    std::vector<double> fit_predict(const TrainSet& train, const FeatureMatrix& query, SeededRng& rng) const override {
        const auto model = fit_forest(train, params_, rng);
        std::vector<double> out(query.rows());
        for (std::size_t i = 0; i < query.rows(); ++i) out[i] = predict_forest(model, query.row(i));
        return out;
    }

    void check_compatible(const Schema& schema, std::size_t target) const override {
        if (std::holds_alternative<resampler::Stratified>(params_.resampler) && !schema[target].kind.is_categorical())
            throw InvalidArgument("stratified forest cannot model continuous column " + schema[target].name);
        if (std::holds_alternative<resampler::NormalParametric>(params_.resampler))
            for (const auto& c : schema)
                if (!c.kind.is_continuous())
                    throw InvalidArgument("normal-parametric forest needs all columns continuous; '" + c.name +
                                          "' is categorical");
    }

    std::string name() const override { return "rf/" + resampler_name(params_.resampler); }
    const ForestParams& params() const noexcept { return params_; }

private:
    ForestParams params_;
};

class BoostingLearner final : public ColumnLearner {
public:
    explicit BoostingLearner(GbmParams params) : params_(std::move(params)) {}

    std::vector<double> fit_predict(const TrainSet& train, const FeatureMatrix& query, SeededRng& rng) const override {
        const auto model = fit_gbm(train, params_, rng);
        std::vector<double> out(query.rows());
        for (std::size_t i = 0; i < query.rows(); ++i) out[i] = predict_gbm(model, query.row(i));
        return out;
    }

    std::string name() const override { return "gbm"; }
    const GbmParams& params() const noexcept { return params_; }

private:
    GbmParams params_;
};

/// Learner used for continuous targets and learner used for categorical ones.
struct LearnerSpec {
    std::shared_ptr<const ColumnLearner> continuous;
    std::shared_ptr<const ColumnLearner> categorical;
};

inline std::shared_ptr<const ColumnLearner> make_forest(ResamplerKind kind, std::size_t trees = 100,
                                                        std::size_t threads = 1) {
    ForestParams p;
    p.trees = trees;
    p.resampler = std::move(kind);
    p.threads = threads;
    return std::make_shared<ForestLearner>(std::move(p));
}

inline std::shared_ptr<const ColumnLearner> make_gbm(std::size_t iterations = 2000, double step = 0.001) {
    GbmParams p;
    p.iterations = iterations;
    p.step = step;
    return std::make_shared<BoostingLearner>(std::move(p));
}

// ----------------------------------------------------------------------------
// Deltas
// ----------------------------------------------------------------------------

struct Delta {
    double continuous = 0.0;
    double categorical = 0.0;
};

/// Change between two successive completions on the originally missing
/// cells: sum (next - prev)^2 / sum next^2 for continuous cells, share of
/// changed labels for categorical ones. 0 when a kind has no missing cells.
inline Delta delta(const DataMatrix& prev, const DataMatrix& next, const Mask& mask) {
    if (prev.rows() != next.rows() || prev.cols() != next.cols() || prev.schema() != next.schema() ||
        mask.rows() != prev.rows() || mask.cols() != prev.cols())
        throw InvalidArgument("delta needs matrices and mask of the same shape");
    double num = 0.0, den = 0.0;
    std::size_t changed = 0, cat_cells = 0;
    for (std::size_t j = 0; j < prev.cols(); ++j) {
        const bool cont = prev.column(j).kind.is_continuous();
        for (std::size_t i = 0; i < prev.rows(); ++i) {
            if (!mask.missing(i, j)) continue;
            const double a = prev.value(i, j);
            const double b = next.value(i, j);
            if (cont) {
                num += (b - a) * (b - a);
                den += b * b;
            } else {
                ++cat_cells;
                changed += a != b;
            }
        }
    }
    Delta d;
    d.continuous = den > 0.0 ? num / den : 0.0;
    d.categorical = cat_cells ? static_cast<double>(changed) / static_cast<double>(cat_cells) : 0.0;
    return d;
}

// ----------------------------------------------------------------------------
// Driver
// ----------------------------------------------------------------------------

struct ImputeOptions {
    std::size_t max_iter = 10;
    std::uint64_t seed = 1;
    /// Called before a column is imputed, with (pass starting at 1, column).
    std::function<void(std::size_t, std::size_t)> on_column;
};

struct ImputeResult {
    DataMatrix completed;
    std::size_t iterations = 0;  // passes run
    std::vector<Delta> deltas;   // one per pass
    bool stopped_on_increase = false;
};

inline std::vector<FeatureInfo> feature_info(const Schema& schema, std::size_t target) {
    std::vector<FeatureInfo> info;
    info.reserve(schema.size() - 1);
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (j == target) continue;
        const auto& k = schema[j].kind;
        switch (k.kind()) {
            case Kind::Continuous: info.push_back({FeatureType::Continuous, 0}); break;
            case Kind::Ordinal: info.push_back({FeatureType::Ordinal, k.level_count()}); break;
            case Kind::Nominal: info.push_back({FeatureType::Nominal, k.level_count()}); break;
        }
    }
    return info;
}

/// Covariates (every column except `target`, in column order) on the given
/// rows of a complete matrix.
inline FeatureMatrix covariates(const DataMatrix& d, std::size_t target, std::span<const std::size_t> rows) {
    FeatureMatrix x(feature_info(d.schema(), target), rows.size());
    std::size_t f = 0;
    for (std::size_t j = 0; j < d.cols(); ++j) {
        if (j == target) continue;
        for (std::size_t r = 0; r < rows.size(); ++r) x(r, f) = d.value(rows[r], j);
        ++f;
    }
    return x;
}

inline TrainSet train_set(const DataMatrix& d, std::size_t target, std::span<const std::size_t> rows) {
    TrainSet ts;
    ts.x = covariates(d, target, rows);
    const auto& kind = d.column(target).kind;
    ts.response_levels = kind.is_categorical() ? kind.level_count() : 0;
    ts.y.reserve(rows.size());
    for (auto i : rows) ts.y.push_back(d.value(i, target));
    return ts;
}

/// Iterative column-by-column imputation.
///
/// Columns are visited in ascending order of missing count (fixed from the
/// input mask). Each column's learner is trained on its observed rows of the
/// current working matrix, so imputations made earlier in the same pass are
/// visible to later columns. After every pass the change against the
/// previous pass is measured; the first increase stops the loop and the
/// previous pass is returned. Continuous-only data watches the continuous
/// delta, categorical-only data the categorical one, mixed data their sum.
/// A pass that changes nothing also stops the loop.
inline ImputeResult impute(const DataMatrix& d, const LearnerSpec& spec, const ImputeOptions& opts = {}) {
    ImputeResult result;
    if (d.missing_count() == 0) {
        result.completed = d;
        return result;
    }
    if (opts.max_iter < 1) throw InvalidArgument("max_iter must be >= 1");

    const Mask mask = d.mask();
    bool has_cont = false, has_cat = false;
    for (std::size_t j = 0; j < d.cols(); ++j) {
        if (d.missing_count(j) == d.rows()) throw FullyMissingColumn(j);
        if (d.missing_count(j) == 0) continue;
        const auto& kind = d.column(j).kind;
        const auto& learner = kind.is_continuous() ? spec.continuous : spec.categorical;
        if (!learner) throw InvalidArgument("no learner configured for column " + d.column(j).name);
        learner->check_compatible(d.schema(), j);
        (kind.is_continuous() ? has_cont : has_cat) = true;
    }

    const auto order = missing_order(d);
    std::vector<ColumnPartition> parts(d.cols());
    for (std::size_t j = 0; j < d.cols(); ++j) parts[j] = partition_column(d, j);

    DataMatrix work = initial_impute(d);
    double previous_active = std::numeric_limits<double>::infinity();

    for (std::size_t pass = 1; pass <= opts.max_iter; ++pass) {
        DataMatrix before = work;
        for (auto j : order) {
            const auto& part = parts[j];
            if (part.mis_idx.empty()) continue;
            if (opts.on_column) opts.on_column(pass, j);
            const auto& learner = d.column(j).kind.is_continuous() ? *spec.continuous : *spec.categorical;
            SeededRng rng(opts.seed, "impute-column", {pass, j});
            const auto preds = learner.fit_predict(train_set(work, j, part.obs_idx),
                                                   covariates(work, j, part.mis_idx), rng);
            for (std::size_t r = 0; r < part.mis_idx.size(); ++r) work.set_value(part.mis_idx[r], j, preds[r]);
        }

        const Delta dl = delta(before, work, mask);
        result.deltas.push_back(dl);
        result.iterations = pass;
        const double active = has_cont && has_cat ? dl.continuous + dl.categorical
                              : has_cont          ? dl.continuous
                                                  : dl.categorical;
        if (active > previous_active) {
            result.completed = std::move(before);
            result.stopped_on_increase = true;
            return result;
        }
        if (active == 0.0) break;
        previous_active = active;
    }
    result.completed = std::move(work);
    return result;
}

// ----------------------------------------------------------------------------
// Named configurations
// ----------------------------------------------------------------------------

struct MethodSettings {
    std::size_t forest_trees = 100;
    std::size_t gbm_iterations = 2000;
    double gbm_step = 0.001;
    std::size_t threads = 1;
};

inline const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names = {"missforest", "missboopf", "rf-strat", "rf-norm", "rf-kernel", "gbm"};
    return names;
}

/// Maps a method name to its learner pair:
///   missforest  plain bootstrap forest for both kinds
///   missboopf   boosting for categorical, kernel-smoothed forest for continuous
///   rf-strat    stratified forest for categorical, plain forest for continuous
///   rf-norm     normal-parametric forest for continuous, plain forest for categorical
///   rf-kernel   kernel-smoothed forest for continuous, plain forest for categorical
///   gbm         boosting for both kinds
inline LearnerSpec named_method(const std::string& name, const MethodSettings& s = {}) {
    auto plain = [&] { return make_forest(resampler::SimpleWithReplacement{}, s.forest_trees, s.threads); };
    auto boost = [&] { return make_gbm(s.gbm_iterations, s.gbm_step); };
    if (name == "missforest") return {plain(), plain()};
    if (name == "missboopf") return {make_forest(resampler::KernelSmoothed{}, s.forest_trees, s.threads), boost()};
    if (name == "rf-strat") return {plain(), make_forest(resampler::Stratified{}, s.forest_trees, s.threads)};
    if (name == "rf-norm") return {make_forest(resampler::NormalParametric{}, s.forest_trees, s.threads), plain()};
    if (name == "rf-kernel") return {make_forest(resampler::KernelSmoothed{}, s.forest_trees, s.threads), plain()};
    if (name == "gbm") return {boost(), boost()};
    throw InvalidArgument("unknown method '" + name + "'");
}

/// One learner by name: rf (bootstrap with replacement), rf-without,
/// rf-strat, rf-norm, rf-kernel, gbm.
inline std::shared_ptr<const ColumnLearner> learner_by_name(const std::string& name, const MethodSettings& s = {}) {
    if (name == "rf") return make_forest(resampler::SimpleWithReplacement{}, s.forest_trees, s.threads);
    if (name == "rf-without") return make_forest(resampler::SimpleWithoutReplacement{}, s.forest_trees, s.threads);
    if (name == "rf-strat") return make_forest(resampler::Stratified{}, s.forest_trees, s.threads);
    if (name == "rf-norm") return make_forest(resampler::NormalParametric{}, s.forest_trees, s.threads);
    if (name == "rf-kernel") return make_forest(resampler::KernelSmoothed{}, s.forest_trees, s.threads);
    if (name == "gbm") return make_gbm(s.gbm_iterations, s.gbm_step);
    throw InvalidArgument("unknown learner '" + name + "'");
}

/// Learner-pair file: `key = value` lines, '#' comments. Keys `continuous`
/// and `categorical` name learners (see learner_by_name); `forest_trees`,
/// `gbm_iterations` and `gbm_step` override `base`.
inline LearnerSpec parse_method_spec(std::string_view text, MethodSettings base = {}) {
    std::string cont = "rf", cat = "rf";
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string v) {
        const auto a = v.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string{};
        return v.substr(a, v.find_last_not_of(" \t\r") - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "method spec line " + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw ParseError(where + "expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        auto number = [&]() {
            const auto v = parse_real(value);
            if (!v || *v <= 0.0) throw ParseError(where + "bad value '" + value + "'");
            return *v;
        };
        if (key == "continuous") cont = value;
        else if (key == "categorical") cat = value;
        else if (key == "forest_trees") base.forest_trees = static_cast<std::size_t>(number());
        else if (key == "gbm_iterations") base.gbm_iterations = static_cast<std::size_t>(number());
        else if (key == "gbm_step") base.gbm_step = number();
        else throw ParseError(where + "unknown key '" + key + "'");
    }
    return {learner_by_name(cont, base), learner_by_name(cat, base)};
}

}  // namespace missboopf
