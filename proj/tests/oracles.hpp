#pragma once

// Independent reference computations used to check the library. None of
// these call into the code under test beyond its plain data types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "missboopf.hpp"

namespace oracle {

using missboopf::FeatureType;
using missboopf::TrainSet;

/// Impurity of a row set: sum of squares about the weighted mean, or W * Gini.
inline double impurity(const TrainSet& ts, const std::vector<std::size_t>& rows) {
    double w = 0.0;
    if (!ts.categorical()) {
        double s = 0.0;
        for (auto i : rows) {
            w += ts.weight(i);
            s += ts.weight(i) * ts.y[i];
        }
        if (w <= 0.0) return 0.0;
        const double mean = s / w;
        double ss = 0.0;
        for (auto i : rows) ss += ts.weight(i) * (ts.y[i] - mean) * (ts.y[i] - mean);
        return ss;
    }
    std::vector<double> c(ts.response_levels, 0.0);
    for (auto i : rows) {
        w += ts.weight(i);
        c[static_cast<std::size_t>(ts.y[i])] += ts.weight(i);
    }
    if (w <= 0.0) return 0.0;
    double gini = 1.0;
    for (double v : c) gini -= (v / w) * (v / w);
    return w * gini;
}

struct RootSplit {
    double score = std::numeric_limits<double>::infinity();
    bool found = false;
};

/// Brute force over every feature and every admissible partition of the
/// rows at the root: all thresholds between distinct values of ordered
/// features, all non-trivial level subsets of nominal ones.
inline RootSplit best_root_split(const TrainSet& ts, std::size_t min_node) {
    RootSplit best;
    const std::size_t n = ts.rows();
    auto consider = [&](const std::vector<std::size_t>& left, const std::vector<std::size_t>& right) {
        if (left.size() < min_node || right.size() < min_node) return;
        const double score = impurity(ts, left) + impurity(ts, right);
        if (score < best.score) {
            best.score = score;
            best.found = true;
        }
    };
    for (std::size_t f = 0; f < ts.x.features(); ++f) {
        if (ts.x.info(f).type == FeatureType::Nominal) {
            const std::size_t levels = ts.x.info(f).levels;
            for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << levels); ++mask) {
                std::vector<std::size_t> l, r;
                for (std::size_t i = 0; i < n; ++i)
                    ((mask >> static_cast<std::size_t>(ts.x(i, f))) & 1u ? l : r).push_back(i);
                consider(l, r);
            }
        } else {
            std::vector<double> values;
            for (std::size_t i = 0; i < n; ++i) values.push_back(ts.x(i, f));
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t k = 0; k + 1 < values.size(); ++k) {
                std::vector<std::size_t> l, r;
                for (std::size_t i = 0; i < n; ++i) (ts.x(i, f) <= values[k] ? l : r).push_back(i);
                consider(l, r);
            }
        }
    }
    return best;
}

/// Impurity after the root split a fitted tree actually made.
inline double tree_root_score(const TrainSet& ts, const missboopf::Tree& t) {
    const auto& root = t.node(0);
    std::vector<std::size_t> l, r;
    for (std::size_t i = 0; i < ts.rows(); ++i) {
        const double v = ts.x(i, static_cast<std::size_t>(root.feature));
        const bool left = root.goes_left.empty() ? v <= root.threshold
                                                 : root.goes_left[static_cast<std::size_t>(v)] == 1;
        (left ? l : r).push_back(i);
    }
    return impurity(ts, l) + impurity(ts, r);
}

/// Central finite difference of f at x along every coordinate.
template <typename F>
std::vector<double> gradient(F f, std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double keep = x[k];
        x[k] = keep + h;
        const double up = f(x);
        x[k] = keep - h;
        const double down = f(x);
        x[k] = keep;
        g[k] = (up - down) / (2.0 * h);
    }
    return g;
}

/// 1-d Gaussian KDE evaluated directly from the textbook formula.
inline double kde_1d(const std::vector<double>& data, double h2, double y) {
    const double sd = std::sqrt(h2);
    double total = 0.0;
    for (double x : data) {
        const double z = (y - x) / sd;
        total += std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
    }
    return total / static_cast<double>(data.size());
}

/// Relative effect P(A < B) + P(A = B)/2 by counting all pairs.
inline double relative_effect_pairs(const std::vector<double>& a, const std::vector<double>& b) {
    double total = 0.0;
    for (double x : a)
        for (double y : b) total += x < y ? 1.0 : (x == y ? 0.5 : 0.0);
    return total / static_cast<double>(a.size() * b.size());
}

/// Grid-refined maximiser of the one-covariate logistic log-likelihood.
inline std::pair<double, double> logistic_grid(const std::vector<double>& x, const std::vector<double>& y) {
    auto ll = [&](double b0, double b1) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double f = b0 + b1 * x[i];
            const double softplus = f > 0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f));
            s += y[i] * f - softplus;
        }
        return s;
    };
    double c0 = 0.0, c1 = 0.0, width = 8.0;
    for (int round = 0; round < 40; ++round) {
        double best = -std::numeric_limits<double>::infinity(), b0 = c0, b1 = c1;
        for (int i = -10; i <= 10; ++i)
            for (int j = -10; j <= 10; ++j) {
                const double u = c0 + width * i / 10.0, v = c1 + width * j / 10.0;
                const double val = ll(u, v);
                if (val > best) {
                    best = val;
                    b0 = u;
                    b1 = v;
                }
            }
        c0 = b0;
        c1 = b1;
        width *= 0.5;
    }
    return {c0, c1};
}

}  // namespace oracle
