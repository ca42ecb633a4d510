#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "missboopf/datamodel.hpp"
#include "missboopf/error.hpp"

namespace missboopf {

struct EvalTriple {
    const DataMatrix& truth;
    const DataMatrix& imputed;
    const Mask& mask;
};

namespace detail {
inline void check_triple(const EvalTriple& e) {
    if (e.truth.schema() != e.imputed.schema() || e.truth.rows() != e.imputed.rows() ||
        e.mask.rows() != e.truth.rows() || e.mask.cols() != e.truth.cols())
        throw InvalidArgument("truth, imputation and mask must share shape and schema");
    for (std::size_t j = 0; j < e.truth.cols(); ++j)
        for (std::size_t i = 0; i < e.truth.rows(); ++i)
            if (e.mask.missing(i, j) && (e.imputed.is_missing(i, j) || e.truth.is_missing(i, j)))
                throw InvalidArgument("truth and imputation must be complete on the masked cells");
}
}  // namespace detail

/// sqrt( sum (truth - imputed)^2 / sum (truth - column mean of truth)^2 ),
/// both sums pooled over the masked cells of all continuous columns. The
/// column means are taken over the masked cells only.
inline double nrmse(const EvalTriple& e) {
    detail::check_triple(e);
    double num = 0.0, den = 0.0;
    std::size_t cells = 0;
    for (std::size_t j = 0; j < e.truth.cols(); ++j) {
        if (!e.truth.column(j).kind.is_continuous()) continue;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < e.truth.rows(); ++i)
            if (e.mask.missing(i, j)) {
                sum += e.truth.value(i, j);
                ++count;
            }
        if (count == 0) continue;
        const double mean = sum / static_cast<double>(count);
        for (std::size_t i = 0; i < e.truth.rows(); ++i)
            if (e.mask.missing(i, j)) {
                const double t = e.truth.value(i, j);
                num += (t - e.imputed.value(i, j)) * (t - e.imputed.value(i, j));
                den += (t - mean) * (t - mean);
            }
        cells += count;
    }
    if (cells == 0) throw InvalidArgument("NRMSE needs at least one missing continuous cell");
    if (!(den > 0.0)) throw InvalidArgument("NRMSE is undefined: true missing values have zero spread");
    return std::sqrt(num / den);
}

/// Share of masked categorical cells whose imputed level differs from the truth.
inline double pfc(const EvalTriple& e) {
    detail::check_triple(e);
    std::size_t wrong = 0, cells = 0;
    for (std::size_t j = 0; j < e.truth.cols(); ++j) {
        if (!e.truth.column(j).kind.is_categorical()) continue;
        for (std::size_t i = 0; i < e.truth.rows(); ++i)
            if (e.mask.missing(i, j)) {
                ++cells;
                wrong += e.truth.value(i, j) != e.imputed.value(i, j);
            }
    }
    if (cells == 0) throw InvalidArgument("PFC needs at least one missing categorical cell");
    return static_cast<double>(wrong) / static_cast<double>(cells);
}

// ----------------------------------------------------------------------------
// Brunner-Munzel
// ----------------------------------------------------------------------------

/// Alternative hypothesis for brunner_munzel(a, b).
enum class Alternative {
    Less,     // values of a tend to be smaller than those of b (effect > 1/2)
    Greater,  // values of a tend to be larger (effect < 1/2)
};

struct BrunnerMunzelResult {
    double relative_effect;  // P(A < B) + P(A = B) / 2
    double statistic;
    double df;
    double p_value;
};

/// Thrown when the variance estimate is zero (complete separation or all ties).
class DegenerateTest : public Error {
public:
    explicit DegenerateTest(double relative_effect)
        : Error("Brunner-Munzel variance estimate is zero"), relative_effect_(relative_effect) {}
    double relative_effect() const noexcept { return relative_effect_; }

private:
    double relative_effect_;
};

/// Midranks (average ranks for ties), 1-based.
inline std::vector<double> midranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t s = 0; s < order.size();) {
        std::size_t t = s;
        while (t + 1 < order.size() && v[order[t + 1]] == v[order[s]]) ++t;
        const double r = 0.5 * static_cast<double>(s + t) + 1.0;
        for (std::size_t q = s; q <= t; ++q) ranks[order[q]] = r;
        s = t + 1;
    }
    return ranks;
}

/// Studentized rank statistic with the t approximation (Satterthwaite df).
inline BrunnerMunzelResult brunner_munzel(std::span<const double> a, std::span<const double> b,
                                          Alternative alt = Alternative::Less) {
    const std::size_t n1 = a.size(), n2 = b.size();
    if (n1 < 2 || n2 < 2) throw InvalidArgument("Brunner-Munzel needs at least two values per sample");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = midranks(pooled);
    const auto ra = midranks(a);
    const auto rb = midranks(b);
    const double m1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0) / n1;
    const double m2 = std::accumulate(ranks.begin() + static_cast<std::ptrdiff_t>(n1), ranks.end(), 0.0) / n2;
    const double N1 = static_cast<double>(n1), N2 = static_cast<double>(n2);

    double s1 = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < n1; ++k) {
        const double t = ranks[k] - ra[k] - m1 + (N1 + 1.0) / 2.0;
        s1 += t * t;
    }
    for (std::size_t k = 0; k < n2; ++k) {
        const double t = ranks[n1 + k] - rb[k] - m2 + (N2 + 1.0) / 2.0;
        s2 += t * t;
    }
    s1 /= N1 - 1.0;
    s2 /= N2 - 1.0;

    const double effect = (m2 - (N2 + 1.0) / 2.0) / N1;
    const double v = N1 * s1 + N2 * s2;
    if (!(v > 0.0)) throw DegenerateTest(effect);
    const double stat = N1 * N2 * (m2 - m1) / ((N1 + N2) * std::sqrt(v));
    const double df = v * v / ((N1 * s1) * (N1 * s1) / (N1 - 1.0) + (N2 * s2) * (N2 * s2) / (N2 - 1.0));
    const boost::math::students_t t(df);
    const double p = alt == Alternative::Less ? boost::math::cdf(boost::math::complement(t, stat))
                                              : boost::math::cdf(t, stat);
    return {effect, stat, df, p};
}

/// "***" below 0.01, "**" below 0.05, "*" below 0.1, otherwise empty.
inline std::string significance_stars(double p) {
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.1) return "*";
    return "";
}

// ----------------------------------------------------------------------------
// Summaries
// ----------------------------------------------------------------------------

struct FiveNumber {
    double min, q1, median, q3, max;
};

/// Linear-interpolation sample quantile.
inline double quantile(std::vector<double> v, double prob) {
    if (v.empty()) throw InvalidArgument("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double h = prob * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline FiveNumber five_number(const std::vector<double>& v) {
    return {quantile(v, 0.0), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75), quantile(v, 1.0)};
}

inline double mean(std::span<const double> v) {
    if (v.empty()) throw InvalidArgument("mean of an empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace missboopf
