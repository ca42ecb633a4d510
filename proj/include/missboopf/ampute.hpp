#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "missboopf/datamodel.hpp"
#include "missboopf/error.hpp"
#include "missboopf/rngdist.hpp"

namespace missboopf {

enum class Mechanism { McarExact, McarBernoulli, Mar, Mnar };

inline std::string mechanism_name(Mechanism m) {
    switch (m) {
        case Mechanism::McarExact: return "MCAR";
        case Mechanism::McarBernoulli: return "MCAR-bernoulli";
        case Mechanism::Mar: return "MAR";
        case Mechanism::Mnar: return "MNAR";
    }
    return "?";
}

inline Mechanism parse_mechanism(const std::string& s) {
    if (s == "MCAR" || s == "mcar" || s == "MCAR-exact" || s == "mcar-exact") return Mechanism::McarExact;
    if (s == "MCAR-bernoulli" || s == "mcar-bernoulli") return Mechanism::McarBernoulli;
    if (s == "MAR" || s == "mar") return Mechanism::Mar;
    if (s == "MNAR" || s == "mnar") return Mechanism::Mnar;
    throw InvalidArgument("unknown mechanism '" + s + "'");
}

struct AmputeConfig {
    Mechanism mechanism = Mechanism::McarExact;
    double rate = 0.1;
    std::uint64_t seed = 1;
};

struct AmputeResult {
    DataMatrix data;
    Mask mask;
};

// ----------------------------------------------------------------------------
// Logistic regression on one covariate
// ----------------------------------------------------------------------------

struct LogisticModel {
    double intercept = 0.0;
    double slope = 0.0;
    bool separated = false;  // one-class labels or perfect separation
    std::size_t iterations = 0;

    double probability(double x) const {
        const double eta = intercept + slope * x;
        return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
    }
};

inline double logistic_log_likelihood(std::span<const double> x, std::span<const double> y, double b0, double b1) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double eta = b0 + b1 * x[i];
        const double softplus = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
        ll += y[i] * eta - softplus;
    }
    return ll;
}

/// Maximum likelihood by Newton-Raphson (IRLS) with step halving. Stops when
/// the log-likelihood changes by less than 1e-8 or after `max_newton` steps.
/// If that cap is hit, the labels are one-class, or the fit is perfect (a
/// log-likelihood of essentially zero), the model is flagged as separated;
/// its probability ordering is still usable.
inline LogisticModel logistic_fit(std::span<const double> x, std::span<const double> y, std::size_t max_newton = 25) {
    if (x.size() != y.size()) throw InvalidArgument("logistic fit needs equal-length inputs");
    if (x.size() < 2) throw InvalidArgument("logistic fit needs at least two rows");
    LogisticModel m;
    const double positives = std::accumulate(y.begin(), y.end(), 0.0);
    if (positives == 0.0 || positives == static_cast<double>(y.size())) m.separated = true;

    double ll = logistic_log_likelihood(x, y, 0.0, 0.0);
    bool converged = false;
    for (std::size_t it = 0; it < max_newton; ++it) {
        double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double p = m.probability(x[i]);
            const double r = y[i] - p;
            const double w = p * (1.0 - p);
            g0 += r;
            g1 += r * x[i];
            h00 += w;
            h01 += w * x[i];
            h11 += w * x[i] * x[i];
        }
        const double det = h00 * h11 - h01 * h01;
        double d0, d1;
        if (det > 1e-12 * std::max(1.0, h00 * h11)) {
            d0 = (h11 * g0 - h01 * g1) / det;
            d1 = (h00 * g1 - h01 * g0) / det;
        } else if (h00 > 1e-300) {
            d0 = g0 / h00;  // constant covariate: intercept-only step
            d1 = 0.0;
        } else {
            break;
        }
        double scale = 1.0;
        double next_ll = logistic_log_likelihood(x, y, m.intercept + d0, m.slope + d1);
        while (next_ll < ll && scale > 1e-10) {
            scale *= 0.5;
            next_ll = logistic_log_likelihood(x, y, m.intercept + scale * d0, m.slope + scale * d1);
        }
        m.intercept += scale * d0;
        m.slope += scale * d1;
        m.iterations = it + 1;
        const double change = std::abs(next_ll - ll);
        ll = next_ll;
        if (change < 1e-8) {
            converged = true;
            break;
        }
    }
    if (!converged || ll > -1e-6 * static_cast<double>(x.size())) m.separated = true;
    return m;
}

// ----------------------------------------------------------------------------
// Mechanisms
// ----------------------------------------------------------------------------

namespace detail {

// r * n products such as 0.3 * 10 land a few ulps off the integer.
inline std::size_t floor_count(double x) { return static_cast<std::size_t>(std::floor(x + 1e-9)); }
inline std::size_t ceil_count(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }

/// Linear-interpolation quantile of sorted values.
inline double quantile_sorted(std::span<const double> sorted, double prob) {
    const double h = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline void blank(AmputeResult& out, std::size_t i, std::size_t j) {
    out.data.set_missing(i, j);
    out.mask.set(i, j, true);
}

inline void mcar_exact(AmputeResult& out, double r, std::uint64_t seed) {
    const std::size_t n = out.data.rows(), p = out.data.cols();
    const std::size_t total = std::min(n * p, ceil_count(r * static_cast<double>(n) * static_cast<double>(p)));
    SeededRng rng(seed, "ampute-mcar-exact");
    std::vector<std::size_t> cells(n * p);
    std::iota(cells.begin(), cells.end(), std::size_t{0});
    for (std::size_t k = 0; k < total; ++k) std::swap(cells[k], cells[k + rng.index(cells.size() - k)]);
    for (std::size_t k = 0; k < total; ++k) blank(out, cells[k] % n, cells[k] / n);
}

inline void mcar_bernoulli(AmputeResult& out, double r, std::uint64_t seed) {
    SeededRng rng(seed, "ampute-mcar-bernoulli");
    for (std::size_t j = 0; j < out.data.cols(); ++j)
        for (std::size_t i = 0; i < out.data.rows(); ++i)
            if (rng.uniform() < r) blank(out, i, j);
}

/// Start column followed by the chain order of the remaining columns.
inline std::vector<std::size_t> mar_chain(std::size_t p, std::uint64_t seed) {
    SeededRng order_rng(seed, "ampute-mar-order");
    const std::size_t start = order_rng.index(p);
    std::vector<std::size_t> chain;
    for (std::size_t j = 0; j < p; ++j)
        if (j != start) chain.push_back(j);
    shuffle(chain, order_rng);
    chain.insert(chain.begin(), start);
    return chain;
}

inline void mar(AmputeResult& out, const DataMatrix& d, double r, std::uint64_t seed) {
    const std::size_t n = d.rows();
    const std::size_t k = floor_count(r * static_cast<double>(n));
    const auto chain = mar_chain(d.cols(), seed);
    {
        SeededRng rng(seed, "ampute-mar-start");
        for (std::size_t i = 0; i < n; ++i)
            if (rng.uniform() < r) blank(out, i, chain[0]);
    }
    for (std::size_t step = 1; step < chain.size(); ++step) {
        const std::size_t pred = chain[step - 1], js = chain[step];
        SeededRng rng(seed, "ampute-mar-step", {step - 1});
        std::vector<double> xs, labels;
        for (std::size_t i = 0; i < n; ++i)
            if (!out.mask.missing(i, pred)) {
                xs.push_back(d.value(i, pred));
                labels.push_back(rng.uniform() < 1.0 - r ? 1.0 : 0.0);
            }
        // Fewer than two observed predecessor rows leaves nothing to fit; the
        // flat model then ranks purely by row index.
        LogisticModel model;
        if (xs.size() >= 2) model = logistic_fit(xs, labels);
        std::vector<std::pair<double, std::size_t>> ranked;
        ranked.reserve(n);
        for (std::size_t i = 0; i < n; ++i) ranked.emplace_back(model.probability(d.value(i, pred)), i);
        std::sort(ranked.begin(), ranked.end());  // ties by row index
        for (std::size_t q = 0; q < k; ++q) blank(out, ranked[q].second, js);
    }
}

inline void mnar(AmputeResult& out, const DataMatrix& d, double r, std::uint64_t seed) {
    const std::size_t n = d.rows();
    const std::size_t k = floor_count(r * static_cast<double>(n));
    for (std::size_t j = 0; j < d.cols(); ++j) {
        SeededRng rng(seed, "ampute-mnar", {j});
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return d.value(a, j) < d.value(b, j); });
        std::vector<double> sorted(n);
        for (std::size_t q = 0; q < n; ++q) sorted[q] = d.value(order[q], j);
        const double lo = quantile_sorted(sorted, r);
        const double hi = quantile_sorted(sorted, 1.0 - r);

        const std::size_t anchor = rng.index(n);
        const double u = rng.uniform();
        const double x = sorted[anchor];
        int direction;
        if (x < lo)
            direction = +1;
        else if (x > hi)
            direction = -1;
        else
            direction = u < 0.5 ? +1 : -1;

        // Block of k consecutive ranks starting at the anchor; shifted back
        // inside [0, n) when it would run off either end.
        std::size_t first;
        if (direction > 0)
            first = std::min(anchor, n - k);
        else
            first = anchor + 1 >= k ? anchor + 1 - k : 0;
        for (std::size_t q = first; q < first + k; ++q) blank(out, order[q], j);
    }
}

}  // namespace detail

/// Inserts missing values into a complete matrix.
///
///   MCAR (exact)      ceil(r n p) cells drawn uniformly without replacement
///   MCAR (bernoulli)  every cell blanked independently with probability r
///   MAR               random start column blanked by Bernoulli(r); each next
///                     column in a random chain loses the floor(r n) rows with
///                     the smallest fitted probability (ties by row index) of a
///                     logistic model of random labels on the previous
///                     column's observed values
///   MNAR              per column, floor(r n) consecutive ranks starting at a
///                     random anchor: upwards below the r-quantile, downwards
///                     above the (1 - r)-quantile, random direction otherwise
inline AmputeResult ampute(const DataMatrix& d, const AmputeConfig& cfg) {
    if (d.missing_count() != 0) throw InvalidArgument("amputation needs a complete matrix");
    const double r = cfg.rate;
    const bool bernoulli = cfg.mechanism == Mechanism::McarBernoulli;
    if (!(bernoulli ? (r >= 0.0 && r < 1.0) : (r > 0.0 && r < 1.0)))
        throw InvalidArgument("missing rate must lie in (0, 1)");
    if ((cfg.mechanism == Mechanism::Mar || cfg.mechanism == Mechanism::Mnar) &&
        detail::floor_count(r * static_cast<double>(d.rows())) == 0)
        throw InvalidArgument("rate " + std::to_string(r) + " leaves floor(r n) = 0 cells per column");

    AmputeResult out{d, Mask(d.rows(), d.cols())};
    switch (cfg.mechanism) {
        case Mechanism::McarExact: detail::mcar_exact(out, r, cfg.seed); break;
        case Mechanism::McarBernoulli: detail::mcar_bernoulli(out, r, cfg.seed); break;
        case Mechanism::Mar: detail::mar(out, d, r, cfg.seed); break;
        case Mechanism::Mnar: detail::mnar(out, d, r, cfg.seed); break;
    }
    return out;
}

}  // namespace missboopf
