#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <random>

#include "missboopf/error.hpp"

namespace missboopf {

// ----------------------------------------------------------------------------
// Seeded streams
// ----------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Stream id from a purpose label and a list of indices (tree, run, pass...).
inline std::uint64_t stream_id(std::string_view label, std::initializer_list<std::uint64_t> indices = {}) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 1099511628211ull;
    }
    for (auto idx : indices) h = splitmix64(h ^ splitmix64(idx));
    return h;
}

/// Deterministic generator keyed by (master seed, stream id). The engine is
/// mt19937_64 and the distributions come from Boost.Random, both of which
/// produce the same sequence on every platform.
class SeededRng {
public:
    using result_type = std::uint64_t;

    SeededRng(std::uint64_t master_seed, std::uint64_t stream)
        : engine_(splitmix64(splitmix64(master_seed) ^ stream)) {}

    SeededRng(std::uint64_t master_seed, std::string_view label, std::initializer_list<std::uint64_t> indices = {})
        : SeededRng(master_seed, stream_id(label, indices)) {}

    SeededRng(const SeededRng&) = delete;
    SeededRng& operator=(const SeededRng&) = delete;
    SeededRng(SeededRng&&) = default;
    SeededRng& operator=(SeededRng&&) = default;

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return boost::random::uniform_01<double>{}(engine_); }
    double normal() { return boost::random::normal_distribution<double>{}(engine_); }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        return boost::random::uniform_int_distribution<std::size_t>{0, n - 1}(engine_);
    }

    /// Fresh 64-bit master seed for a child computation.
    std::uint64_t next_seed() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// In-place Fisher-Yates shuffle driven by SeededRng::index.
template <typename T>
void shuffle(std::vector<T>& v, SeededRng& rng) {
    for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[rng.index(k)]);
}

// ----------------------------------------------------------------------------
// Symmetric PSD matrices
// ----------------------------------------------------------------------------

/// Dense symmetric matrix meant to be positive semidefinite.
class SpdMatrix {
public:
    SpdMatrix() = default;

    explicit SpdMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw InvalidArgument("SpdMatrix must be square");
        double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
        if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw InvalidArgument("SpdMatrix must be symmetric");
        m_ = 0.5 * (m_ + m_.transpose());
    }

    Eigen::Index dim() const { return m_.rows(); }
    const Eigen::MatrixXd& matrix() const { return m_; }
    double trace() const { return m_.trace(); }

    /// Eigenvalues >= -1e-10 * (largest eigenvalue).
    bool satisfies_invariants() const {
        if (m_.size() == 0) return true;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
        double top = es.eigenvalues().maxCoeff();
        return es.eigenvalues().minCoeff() >= -1e-10 * std::max(top, 0.0);
    }

private:
    Eigen::MatrixXd m_;
};

/// Symmetric PSD square root F with F F = m, via eigendecomposition.
///
/// Negative eigenvalues down to -1e-6 * trace are treated as rounding: the
/// diagonal is jittered once by 1e-10 * trace / d and any remaining negative
/// eigenvalues are clamped to zero. Anything below that throws.
inline Eigen::MatrixXd chol_or_sqrt(const SpdMatrix& m) {
    const Eigen::Index d = m.dim();
    if (d == 0) return {};
    Eigen::MatrixXd a = m.matrix();
    const double tr = std::abs(a.trace());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw NotPositiveSemidefinite("eigendecomposition failed");
    double lowest = es.eigenvalues().minCoeff();
    if (lowest < -1e-6 * tr || (tr == 0.0 && lowest < 0.0))
        throw NotPositiveSemidefinite("matrix has eigenvalue " + std::to_string(lowest));
    if (lowest < 0.0) {
        a.diagonal().array() += 1e-10 * tr / static_cast<double>(d);
        es.compute(a);
    }
    Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

// ----------------------------------------------------------------------------
// Samplers
// ----------------------------------------------------------------------------

/// `count` x d matrix of i.i.d. N(mu, sigma) rows.
inline Eigen::MatrixXd mvnormal_sample(SeededRng& rng, const Eigen::VectorXd& mu, const SpdMatrix& sigma,
                                       std::size_t count) {
    if (mu.size() != sigma.dim()) throw InvalidArgument("mean and covariance dimensions differ");
    const Eigen::MatrixXd factor = chol_or_sqrt(sigma);
    const Eigen::Index d = mu.size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), d);
    Eigen::VectorXd z(d);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index k = 0; k < d; ++k) z[k] = rng.normal();
        out.row(r) = (mu + factor * z).transpose();
    }
    return out;
}

inline std::vector<double> dirichlet_sample(SeededRng& rng, std::span<const double> alpha) {
    if (alpha.empty()) throw InvalidArgument("Dirichlet needs at least one concentration");
    std::vector<double> g;
    g.reserve(alpha.size());
    double total = 0.0;
    for (double a : alpha) {
        if (!(a > 0.0)) throw InvalidArgument("Dirichlet concentrations must be positive");
        g.push_back(boost::random::gamma_distribution<double>{a, 1.0}(rng.engine()));
        total += g.back();
    }
    for (double& v : g) v /= total;
    return g;
}

namespace dist {
struct Chi2 { double df; };
struct LogNormal { double mu; double sigma; };
struct Normal { double mean = 0.0; double sd = 1.0; };
struct Uniform { double lo = 0.0; double hi = 1.0; };
struct Bernoulli { double q; };
}  // namespace dist

using ScalarDist = std::variant<dist::Chi2, dist::LogNormal, dist::Normal, dist::Uniform, dist::Bernoulli>;

inline std::vector<double> sample(SeededRng& rng, const ScalarDist& d, std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    auto fill = [&](auto&& distribution) {
        for (std::size_t k = 0; k < count; ++k) out.push_back(static_cast<double>(distribution(rng.engine())));
    };
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, dist::Chi2>) {
                if (!(p.df > 0.0)) throw InvalidArgument("chi2 needs df > 0");
                fill(boost::random::chi_squared_distribution<double>{p.df});
            } else if constexpr (std::is_same_v<T, dist::LogNormal>) {
                if (!(p.sigma > 0.0)) throw InvalidArgument("lognormal needs sigma > 0");
                // Boost's lognormal is parameterised by the mean/sd of the
                // log; normal + exp keeps the (mu, sigma) meaning explicit.
                boost::random::normal_distribution<double> n{p.mu, p.sigma};
                for (std::size_t k = 0; k < count; ++k) out.push_back(std::exp(n(rng.engine())));
            } else if constexpr (std::is_same_v<T, dist::Normal>) {
                if (!(p.sd >= 0.0)) throw InvalidArgument("normal needs sd >= 0");
                fill(boost::random::normal_distribution<double>{p.mean, p.sd});
            } else if constexpr (std::is_same_v<T, dist::Uniform>) {
                if (!(p.lo < p.hi)) throw InvalidArgument("uniform needs lo < hi");
                fill(boost::random::uniform_real_distribution<double>{p.lo, p.hi});
            } else {
                if (!(p.q >= 0.0 && p.q <= 1.0)) throw InvalidArgument("bernoulli needs q in [0, 1]");
                fill(boost::random::bernoulli_distribution<double>{p.q});
            }
        },
        d);
    return out;
}

struct Moments {
    Eigen::VectorXd mean;
    SpdMatrix cov;
};

/// Sample mean and unbiased (n - 1) covariance of the rows.
inline Moments empirical_moments(const Eigen::MatrixXd& rows) {
    if (rows.rows() < 2) throw InvalidArgument("moments need at least two rows");
    Eigen::VectorXd mean = rows.colwise().mean().transpose();
    Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows.rows() - 1);
    cov = 0.5 * (cov + cov.transpose());
    return {std::move(mean), SpdMatrix(std::move(cov))};
}

}  // namespace missboopf
