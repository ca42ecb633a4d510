#include <gtest/gtest.h>

#include <map>
#include <random>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace missboopf;

namespace {

TrainSet continuous_set(std::size_t n, std::size_t p, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z;
    TrainSet ts;
    ts.x = FeatureMatrix(std::vector<FeatureInfo>(p, {FeatureType::Continuous, 0}), n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t f = 0; f < p; ++f) s += (ts.x(i, f) = z(eng));
        ts.y.push_back(0.5 * s + z(eng));
    }
    return ts;
}

}  // namespace

TEST(Bandwidth, NormalScaleFactorFrozen) {
    // d = 1, n = 100: factor (4 / 300)^(2 / 5).
    Eigen::MatrixXd rows(100, 1);
    for (int i = 0; i < 100; ++i) rows(i, 0) = i % 7;
    const auto h = normal_scale_bandwidth(rows);
    const double var = empirical_moments(rows).cov.matrix()(0, 0);
    EXPECT_NEAR(h.h.matrix()(0, 0) / var, 0.17781790722643998, 1e-12);
    EXPECT_NEAR(std::pow(4.0 / 300.0, 0.4), 0.17781790722643998, 1e-15);
}

TEST(Bandwidth, MultivariateFactor) {
    Eigen::MatrixXd rows(50, 3);
    std::mt19937_64 eng(1);
    std::normal_distribution<double> z;
    for (int i = 0; i < 50; ++i)
        for (int c = 0; c < 3; ++c) rows(i, c) = z(eng) * (c + 1);
    const auto h = normal_scale_bandwidth(rows).h.matrix();
    const double factor = std::pow(4.0 / (50.0 * 5.0), 2.0 / 7.0);
    EXPECT_LT((h - factor * empirical_moments(rows).cov.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kde, OneDimensionalMatchesDirectFormula) {
    const std::vector<double> data = {-1.0, 0.2, 0.3, 2.5, 4.0};
    Eigen::MatrixXd rows(5, 1);
    for (int i = 0; i < 5; ++i) rows(i, 0) = data[i];
    Eigen::MatrixXd h(1, 1);
    h << 0.4;
    double sup = 0.0;
    for (double y = -4.0; y <= 7.0; y += 0.01) {
        Eigen::VectorXd v(1);
        v << y;
        sup = std::max(sup, std::abs(kde_density(rows, SpdMatrix(h), v) - oracle::kde_1d(data, 0.4, y)));
    }
    EXPECT_LT(sup, 1e-12);
}

TEST(Resample, SimpleWithReplacementSizeAndMembership) {
    const auto ts = continuous_set(30, 2, 1);
    SeededRng rng(1, "r");
    const auto out = resample(ts, resampler::SimpleWithReplacement{}, rng);
    EXPECT_EQ(out.rows(), 30u);
    for (std::size_t i = 0; i < out.rows(); ++i)
        EXPECT_NE(std::find(ts.y.begin(), ts.y.end(), out.y[i]), ts.y.end());
    SeededRng rng2(1, "r");
    EXPECT_EQ(resample(ts, resampler::SimpleWithReplacement{10}, rng2).rows(), 10u);
    EXPECT_THROW(resample(ts, resampler::SimpleWithReplacement{31}, rng2), InvalidArgument);
}

TEST(Resample, WithoutReplacementHasDistinctRows) {
    const auto ts = continuous_set(40, 1, 2);
    SeededRng rng(2, "r");
    const auto out = resample(ts, resampler::SimpleWithoutReplacement{}, rng);
    EXPECT_EQ(out.rows(), 25u);  // round(0.632 * 40)
    std::set<double> seen(out.y.begin(), out.y.end());
    EXPECT_EQ(seen.size(), out.rows());
    EXPECT_EQ(default_subsample_size(1), 1u);
    EXPECT_EQ(default_subsample_size(2), 2u);
    EXPECT_EQ(default_subsample_size(3), 2u);
    EXPECT_EQ(default_subsample_size(100), 63u);
}

TEST(Resample, StratifiedKeepsLevelCounts) {
    TrainSet ts;
    ts.x = FeatureMatrix({{FeatureType::Continuous, 0}}, 20);
    ts.response_levels = 3;
    for (int i = 0; i < 20; ++i) {
        ts.x(i, 0) = i;
        ts.y.push_back(i < 3 ? 0 : (i < 8 ? 1 : 2));
    }
    SeededRng rng(3, "r");
    for (int rep = 0; rep < 20; ++rep) {
        const auto out = resample(ts, resampler::Stratified{}, rng);
        std::map<double, int> counts;
        for (std::size_t i = 0; i < out.rows(); ++i) {
            ++counts[out.y[i]];
            EXPECT_EQ(ts.y[static_cast<std::size_t>(out.x(i, 0))], out.y[i]);  // rows stay intact
        }
        EXPECT_EQ(counts[0], 3);
        EXPECT_EQ(counts[1], 5);
        EXPECT_EQ(counts[2], 12);
    }
    EXPECT_THROW(resample(continuous_set(5, 1, 1), resampler::Stratified{}, rng), InvalidArgument);
}

TEST(Resample, NormalParametricMatchesMoments) {
    const auto ts = continuous_set(200, 2, 4);
    Eigen::MatrixXd joint(200, 3);
    for (int i = 0; i < 200; ++i) joint.row(i) << ts.x(i, 0), ts.x(i, 1), ts.y[i];
    const auto target = empirical_moments(joint);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
    SeededRng rng(4, "r");
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
        const auto out = resample(ts, resampler::NormalParametric{}, rng);
        Eigen::MatrixXd m(200, 3);
        for (int i = 0; i < 200; ++i) m.row(i) << out.x(i, 0), out.x(i, 1), out.y[i];
        const auto mo = empirical_moments(m);
        acc += mo.cov.matrix() / reps;
        mean += mo.mean / reps;
    }
    EXPECT_LT((acc - target.cov.matrix()).cwiseAbs().maxCoeff(), 0.05);
    EXPECT_LT((mean - target.mean).cwiseAbs().maxCoeff(), 0.02);

    TrainSet mixed = ts;
    mixed.x = FeatureMatrix({{FeatureType::Ordinal, 3}, {FeatureType::Continuous, 0}}, 200);
    EXPECT_THROW(resample(mixed, resampler::NormalParametric{}, rng), InvalidArgument);
}

TEST(Resample, KernelWithZeroBandwidthIsPlainBootstrap) {
    const auto ts = continuous_set(25, 2, 5);
    SeededRng a(7, "r"), b(7, "r");
    const auto plain = resample(ts, resampler::SimpleWithReplacement{}, a);
    const auto smooth = resample(ts, resampler::KernelSmoothed{Eigen::MatrixXd::Zero(3, 3)}, b);
    EXPECT_EQ(plain.y, smooth.y);
    EXPECT_TRUE(plain.x == smooth.x);
}

TEST(Resample, KernelJointCovarianceIsInflated) {
    // Cov of the smoothed bootstrap = S (n - 1) / n + H.
    const auto ts = continuous_set(60, 1, 6);
    Eigen::MatrixXd joint(60, 2);
    for (int i = 0; i < 60; ++i) joint.row(i) << ts.x(i, 0), ts.y[i];
    const Eigen::MatrixXd s = empirical_moments(joint).cov.matrix();
    const Eigen::MatrixXd h = normal_scale_bandwidth(joint).h.matrix();
    const Eigen::MatrixXd expected = s * 59.0 / 60.0 + h;
    SeededRng rng(8, "r");
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
    Eigen::VectorXd mu = joint.colwise().mean().transpose();
    const int reps = 400;
    for (int rep = 0; rep < reps; ++rep) {
        const auto out = resample(ts, resampler::KernelSmoothed{}, rng);
        for (int i = 0; i < 60; ++i) {
            Eigen::Vector2d v(out.x(i, 0), out.y[i]);
            v -= mu;
            acc += v * v.transpose();
        }
    }
    acc /= reps * 60.0;
    EXPECT_LT((acc - expected).cwiseAbs().maxCoeff(), 0.06 * expected.cwiseAbs().maxCoeff());
}

TEST(Resample, KernelLeavesCategoricalCoordinatesUntouched) {
    TrainSet ts;
    ts.x = FeatureMatrix({{FeatureType::Nominal, 3}, {FeatureType::Continuous, 0}}, 30);
    ts.response_levels = 2;
    for (int i = 0; i < 30; ++i) {
        ts.x(i, 0) = i % 3;
        ts.x(i, 1) = i * 0.1;
        ts.y.push_back(i % 2);
    }
    SeededRng rng(9, "r");
    const auto out = resample(ts, resampler::KernelSmoothed{}, rng);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        EXPECT_EQ(out.x(i, 0), std::round(out.x(i, 0)));
        EXPECT_TRUE(out.y[i] == 0.0 || out.y[i] == 1.0);
    }
    EXPECT_THROW(resample(ts, resampler::KernelSmoothed{Eigen::MatrixXd::Zero(2, 2)}, rng), InvalidArgument);
}
