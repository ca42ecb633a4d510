#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace missboopf;

namespace {

TrainSet random_trainset(std::size_t n, bool categorical_response, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_int_distribution<int> small(0, 4);
    std::uniform_int_distribution<int> lvl(0, 3);
    std::normal_distribution<double> z;
    TrainSet ts;
    ts.x = FeatureMatrix({{FeatureType::Continuous, 0}, {FeatureType::Ordinal, 5}, {FeatureType::Nominal, 4}}, n);
    for (std::size_t i = 0; i < n; ++i) {
        ts.x(i, 0) = std::round(z(eng) * 4.0) / 4.0;  // rounded to create ties
        ts.x(i, 1) = small(eng);
        ts.x(i, 2) = lvl(eng);
    }
    if (categorical_response) {
        ts.response_levels = 3;
        for (std::size_t i = 0; i < n; ++i) ts.y.push_back(static_cast<double>((static_cast<int>(ts.x(i, 2)) + small(eng) / 3) % 3));
    } else {
        for (std::size_t i = 0; i < n; ++i) ts.y.push_back(ts.x(i, 0) + (ts.x(i, 2) == 1 ? 2.0 : 0.0) + 0.3 * z(eng));
    }
    return ts;
}

}  // namespace

class RootSplitBruteForce : public ::testing::TestWithParam<int> {};

TEST_P(RootSplitBruteForce, MatchesExhaustiveSearch) {
    const auto seed = static_cast<std::uint64_t>(GetParam());
    for (bool cat : {false, true}) {
        const std::size_t n = 4 + seed % 9;  // 4..12 rows
        const auto ts = random_trainset(n, cat, seed * 7 + cat);
        for (std::size_t min_node : {1u, 2u}) {
            SeededRng rng(seed, "cart-test");
            const Tree t = fit_tree(ts, {std::nullopt, min_node, 1}, rng);
            const auto brute = oracle::best_root_split(ts, min_node);
            const double parent = oracle::impurity(ts, [&] {
                std::vector<std::size_t> all(n);
                std::iota(all.begin(), all.end(), std::size_t{0});
                return all;
            }());
            if (t.node(0).is_leaf()) {
                EXPECT_TRUE(!brute.found || brute.score >= parent - 1e-12 * std::max(parent, 1.0))
                    << "tree did not split although an improving split exists";
            } else {
                ASSERT_TRUE(brute.found);
                EXPECT_NEAR(oracle::tree_root_score(ts, t), brute.score, 1e-10 * std::max(1.0, brute.score));
            }
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RootSplitBruteForce, ::testing::Range(1, 41));

TEST(Cart, ContinuousThresholdIsMidpoint) {
    TrainSet ts;
    ts.x = FeatureMatrix({{FeatureType::Continuous, 0}}, 4);
    const double xs[] = {1.0, 2.0, 5.0, 6.0};
    const double ys[] = {0.0, 0.0, 10.0, 10.0};
    for (int i = 0; i < 4; ++i) {
        ts.x(i, 0) = xs[i];
        ts.y.push_back(ys[i]);
    }
    SeededRng rng(1, "t");
    const Tree t = fit_tree(ts, {std::nullopt, 1, 5}, rng);
    ASSERT_FALSE(t.node(0).is_leaf());
    EXPECT_DOUBLE_EQ(t.node(0).threshold, 3.5);
    EXPECT_EQ(predict_tree(t, std::vector<double>{0.0})[0], 0.0);
    EXPECT_EQ(predict_tree(t, std::vector<double>{9.0})[0], 10.0);
    EXPECT_EQ(t.leaf_count(), 2u);
}

TEST(Cart, StoppingRules) {
    const auto ts = random_trainset(40, false, 3);
    SeededRng rng(1, "t");
    EXPECT_LE(fit_tree(ts, {std::nullopt, 1, 2}, rng).depth(), 2u);
    // Nodes smaller than 2 * min_node are never split.
    EXPECT_TRUE(fit_tree(ts, {std::nullopt, 21, 30}, rng).node(0).is_leaf());
    // A pure response gives a single leaf.
    TrainSet pure = ts;
    std::fill(pure.y.begin(), pure.y.end(), 3.0);
    const Tree leaf = fit_tree(pure, {std::nullopt, 1, 30}, rng);
    EXPECT_EQ(leaf.node_count(), 1u);
    EXPECT_EQ(predict_tree(leaf, ts.x.row(0))[0], 3.0);
}

TEST(Cart, ClassificationLeavesHoldProbabilities) {
    const auto ts = random_trainset(60, true, 4);
    SeededRng rng(2, "t");
    const Tree t = fit_tree(ts, TreeParams::classification_defaults(), rng);
    EXPECT_EQ(t.width(), 3u);
    for (std::size_t l = 0; l < t.leaf_count(); ++l) {
        double total = 0.0;
        for (double p : t.leaf_payload(l)) total += p;
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Cart, NominalUnseenLevelFollowsHeavierChild) {
    // Levels 0 and 1 only; level 2 is never seen in training.
    TrainSet ts;
    ts.x = FeatureMatrix({{FeatureType::Nominal, 3}}, 6);
    const double lv[] = {0, 0, 0, 0, 1, 1};
    const double ys[] = {1, 1, 1, 1, 5, 5};
    for (int i = 0; i < 6; ++i) {
        ts.x(i, 0) = lv[i];
        ts.y.push_back(ys[i]);
    }
    SeededRng rng(1, "t");
    const Tree t = fit_tree(ts, {std::nullopt, 1, 5}, rng);
    ASSERT_FALSE(t.node(0).is_leaf());
    EXPECT_EQ(predict_tree(t, std::vector<double>{2.0})[0], 1.0);  // level 0 side holds 4 of 6 rows
}

TEST(Cart, ManyLevelNominalUsesOrderingTrick) {
    // 12 levels, response equals level parity: the optimal split groups even
    // against odd levels, which the mean ordering finds exactly.
    TrainSet ts;
    const std::size_t n = 48;
    ts.x = FeatureMatrix({{FeatureType::Nominal, 12}}, n);
    for (std::size_t i = 0; i < n; ++i) {
        ts.x(i, 0) = static_cast<double>(i % 12);
        ts.y.push_back(static_cast<double>((i % 12) % 2));
    }
    SeededRng rng(1, "t");
    const Tree t = fit_tree(ts, {std::nullopt, 1, 1}, rng);
    EXPECT_NEAR(oracle::tree_root_score(ts, t), 0.0, 1e-12);
}

TEST(Cart, MtryRestrictsCandidatesDeterministically) {
    const auto ts = random_trainset(50, false, 5);
    SeededRng a(3, "t"), b(3, "t");
    const Tree ta = fit_tree(ts, {1, 2, 10}, a);
    const Tree tb = fit_tree(ts, {1, 2, 10}, b);
    EXPECT_TRUE(ta == tb);
    SeededRng c(1, "t");
    EXPECT_THROW(fit_tree(ts, {4, 2, 10}, c), InvalidArgument);
    EXPECT_THROW(fit_tree(ts, {std::nullopt, 0, 10}, c), InvalidArgument);
}

TEST(Cart, Argmax) {
    EXPECT_EQ(argmax(std::vector<double>{0.2, 0.4, 0.4}), 1u);
    EXPECT_EQ(argmax(std::vector<double>{0.5}), 0u);
}
