#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "missboopf/cart.hpp"
#include "missboopf/error.hpp"
#include "missboopf/rngdist.hpp"

namespace missboopf {

namespace resampler {
/// Plain bootstrap; N defaults to n.
struct SimpleWithReplacement {
    std::optional<std::size_t> n;
};
/// Subsampling; N defaults to max(2, round(0.632 n)).
struct SimpleWithoutReplacement {
    std::optional<std::size_t> n;
};
/// Per-response-level bootstrap that keeps every level's count.
struct Stratified {};
/// Draws from N(mean, cov) fitted on the joint (covariates, response) table.
struct NormalParametric {};
/// Smoothed bootstrap: a uniformly drawn row plus N(0, H) noise on its
/// continuous coordinates. H is the normal scale bandwidth unless fixed.
struct KernelSmoothed {
    std::optional<Eigen::MatrixXd> fixed_bandwidth;
};
}  // namespace resampler

using ResamplerKind = std::variant<resampler::SimpleWithReplacement, resampler::SimpleWithoutReplacement,
                                   resampler::Stratified, resampler::NormalParametric, resampler::KernelSmoothed>;

inline std::string resampler_name(const ResamplerKind& k) {
    switch (k.index()) {
        case 0: return "simple-with-replacement";
        case 1: return "simple-without-replacement";
        case 2: return "stratified";
        case 3: return "normal-parametric";
        default: return "kernel-smoothed";
    }
}

struct Bandwidth {
    SpdMatrix h;
};

/// Normal scale rule: H = (4 / (n (d + 2)))^(2 / (d + 4)) * S, with S the
/// unbiased sample covariance of the n x d table.
inline Bandwidth normal_scale_bandwidth(const Eigen::MatrixXd& rows) {
    const auto n = static_cast<double>(rows.rows());
    const auto d = static_cast<double>(rows.cols());
    if (rows.rows() < 2) throw InvalidArgument("bandwidth needs at least two rows");
    if (rows.cols() < 1) throw InvalidArgument("bandwidth needs at least one coordinate");
    auto moments = empirical_moments(rows);
    const double factor = std::pow(4.0 / (n * (d + 2.0)), 2.0 / (d + 4.0));
    return {SpdMatrix(factor * moments.cov.matrix())};
}

/// Gaussian kernel density estimate (1/n) sum_i K_H(y - Y_i).
inline double kde_density(const Eigen::MatrixXd& rows, const SpdMatrix& h, const Eigen::VectorXd& y) {
    const auto d = static_cast<double>(rows.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(h.matrix());
    if (llt.info() != Eigen::Success) throw NotPositiveSemidefinite("KDE bandwidth must be positive definite");
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double norm = std::exp(-0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det));
    double total = 0.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        Eigen::VectorXd diff = y - rows.row(i).transpose();
        total += std::exp(-0.5 * diff.dot(llt.solve(diff)));
    }
    return norm * total / static_cast<double>(rows.rows());
}

namespace detail {

/// Column indices of continuous features.
inline std::vector<std::size_t> continuous_features(const TrainSet& ts) {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < ts.x.features(); ++f)
        if (ts.x.info(f).type == FeatureType::Continuous) out.push_back(f);
    return out;
}

/// Continuous features followed by the response when it is continuous.
inline Eigen::MatrixXd joint_continuous(const TrainSet& ts, const std::vector<std::size_t>& feats) {
    const Eigen::Index d = static_cast<Eigen::Index>(feats.size() + (ts.categorical() ? 0 : 1));
    Eigen::MatrixXd m(static_cast<Eigen::Index>(ts.rows()), d);
    for (std::size_t i = 0; i < ts.rows(); ++i) {
        Eigen::Index c = 0;
        for (auto f : feats) m(static_cast<Eigen::Index>(i), c++) = ts.x(i, f);
        if (!ts.categorical()) m(static_cast<Eigen::Index>(i), c) = ts.y[i];
    }
    return m;
}

inline TrainSet with_replacement(const TrainSet& ts, std::size_t count, SeededRng& rng) {
    std::vector<std::size_t> idx(count);
    for (auto& i : idx) i = rng.index(ts.rows());
    return ts.select_rows(idx);
}

}  // namespace detail

inline std::size_t default_subsample_size(std::size_t n) {
    auto size = static_cast<std::size_t>(std::llround(0.632 * static_cast<double>(n)));
    return std::min(n, std::max<std::size_t>(2, size));
}

/// Generates one tree's training set from `ts`.
inline TrainSet resample(const TrainSet& ts, const ResamplerKind& kind, SeededRng& rng) {
    ts.validate();
    const std::size_t n = ts.rows();
    return std::visit(
        [&](const auto& k) -> TrainSet {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, resampler::SimpleWithReplacement>) {
                const std::size_t count = k.n.value_or(n);
                if (count < 1 || count > n) throw InvalidArgument("resample size must lie in [1, n]");
                return detail::with_replacement(ts, count, rng);
            } else if constexpr (std::is_same_v<K, resampler::SimpleWithoutReplacement>) {
                const std::size_t count = k.n.value_or(default_subsample_size(n));
                if (count < 1 || count > n) throw InvalidArgument("resample size must lie in [1, n]");
                std::vector<std::size_t> idx(n);
                std::iota(idx.begin(), idx.end(), std::size_t{0});
                for (std::size_t j = 0; j < count; ++j) std::swap(idx[j], idx[j + rng.index(n - j)]);
                idx.resize(count);
                return ts.select_rows(idx);
            } else if constexpr (std::is_same_v<K, resampler::Stratified>) {
                if (!ts.categorical()) throw InvalidArgument("stratified resampling needs a categorical response");
                std::vector<std::vector<std::size_t>> strata(ts.response_levels);
                for (std::size_t i = 0; i < n; ++i) strata[static_cast<std::size_t>(ts.y[i])].push_back(i);
                std::vector<std::size_t> idx;
                idx.reserve(n);
                for (const auto& s : strata)
                    for (std::size_t j = 0; j < s.size(); ++j) idx.push_back(s[rng.index(s.size())]);
                return ts.select_rows(idx);
            } else if constexpr (std::is_same_v<K, resampler::NormalParametric>) {
                if (ts.categorical()) throw InvalidArgument("normal resampling needs a continuous response");
                const auto feats = detail::continuous_features(ts);
                if (feats.size() != ts.x.features())
                    throw InvalidArgument("normal resampling needs all covariates continuous");
                if (n < 2) return ts;
                const Eigen::MatrixXd joint = detail::joint_continuous(ts, feats);
                const auto moments = empirical_moments(joint);
                const Eigen::MatrixXd draws = mvnormal_sample(rng, moments.mean, moments.cov, n);
                TrainSet out;
                out.x = FeatureMatrix(ts.x.info(), n);
                out.y.resize(n);
                const auto p = static_cast<Eigen::Index>(feats.size());
                for (std::size_t i = 0; i < n; ++i) {
                    const auto r = static_cast<Eigen::Index>(i);
                    for (Eigen::Index f = 0; f < p; ++f) out.x(i, static_cast<std::size_t>(f)) = draws(r, f);
                    out.y[i] = draws(r, p);
                }
                return out;
            } else {
                // Row picks come first so that a zero bandwidth reproduces
                // SimpleWithReplacement(n) draw for draw.
                TrainSet out = detail::with_replacement(ts, n, rng);
                const auto feats = detail::continuous_features(ts);
                const std::size_t d = feats.size() + (ts.categorical() ? 0 : 1);
                if (d == 0) return out;
                Eigen::MatrixXd h;
                if (k.fixed_bandwidth) {
                    h = *k.fixed_bandwidth;
                    if (h.rows() != static_cast<Eigen::Index>(d) || h.cols() != static_cast<Eigen::Index>(d))
                        throw InvalidArgument("fixed bandwidth has wrong dimension");
                } else {
                    if (n < 2) return out;
                    h = normal_scale_bandwidth(detail::joint_continuous(ts, feats)).h.matrix();
                }
                if (h.isZero(0.0)) return out;
                const Eigen::MatrixXd factor = chol_or_sqrt(SpdMatrix(h));
                Eigen::VectorXd z(static_cast<Eigen::Index>(d));
                for (std::size_t i = 0; i < n; ++i) {
                    for (Eigen::Index c = 0; c < z.size(); ++c) z[c] = rng.normal();
                    const Eigen::VectorXd noise = factor * z;
                    Eigen::Index c = 0;
                    for (auto f : feats) out.x(i, f) += noise[c++];
                    if (!ts.categorical()) out.y[i] += noise[c];
                }
                return out;
            }
        },
        kind);
}

}  // namespace missboopf
