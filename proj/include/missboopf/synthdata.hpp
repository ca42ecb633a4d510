#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "missboopf/datamodel.hpp"
#include "missboopf/error.hpp"
#include "missboopf/rngdist.hpp"

namespace missboopf {

enum class Design { D1, D2, D3, D4, D5, D6, D7 };

/// Accepts "D1".."D7", case-insensitively.
inline Design parse_design(const std::string& s) {
    if (s.size() == 2 && (s[0] == 'D' || s[0] == 'd') && s[1] >= '1' && s[1] <= '7')
        return static_cast<Design>(s[1] - '1');
    throw InvalidArgument("unknown design '" + s + "'");
}

inline std::string design_name(Design d) { return "D" + std::to_string(static_cast<int>(d) + 1); }

inline bool is_categorical_design(Design d) { return d == Design::D1 || d == Design::D2; }

struct DesignSpec {
    Design design = Design::D3;
    std::size_t n = 250;
    std::size_t p = 15;  // D1/D2 always use 7 nominal + 8 ordinal columns
    std::uint64_t seed = 1;
    bool rho07 = false;  // D3 only: diagonal 9 instead of 15.3
};

// ----------------------------------------------------------------------------
// Categorical designs
// ----------------------------------------------------------------------------

inline constexpr std::size_t kNominalColumns = 7;
inline constexpr std::size_t kOrdinalColumns = 8;
inline constexpr double kLatentCorrelation = 0.4;

inline std::array<double, 4> dirichlet_concentration(Design d) {
    if (d == Design::D1) return {100.0, 100.0, 100.0, 100.0};
    if (d == Design::D2) return {100.0, 200.0, 500.0, 500.0};
    throw InvalidArgument(design_name(d) + " is not a categorical design");
}

struct CategoricalDraw {
    DataMatrix data;
    Eigen::MatrixXd latent;                       // n x 15 normal draws before thresholding
    std::vector<std::vector<double>> probabilities;  // per column level probabilities
};

inline Schema categorical_schema() {
    Schema s;
    for (std::size_t j = 0; j < kNominalColumns; ++j)
        s.push_back({"N" + std::to_string(j + 1), ColumnKind::nominal({"A", "B", "C", "D"})});
    for (std::size_t j = 0; j < kOrdinalColumns; ++j)
        s.push_back({"O" + std::to_string(j + 1), ColumnKind::ordinal({"1", "2", "3", "4"})});
    return s;
}

/// Thresholded Gaussian copula: per column level probabilities from the
/// design's Dirichlet, normal-quantile cut points from their cumulative sums,
/// latent rows from N(0, R) with unit diagonal and 0.4 off the diagonal.
inline CategoricalDraw gen_categorical_detailed(const DesignSpec& spec, SeededRng& rng) {
    const auto alpha = dirichlet_concentration(spec.design);
    const std::size_t p = kNominalColumns + kOrdinalColumns;
    CategoricalDraw out{DataMatrix(categorical_schema(), spec.n), {}, {}};

    const boost::math::normal standard;
    std::vector<std::vector<double>> cuts(p);
    for (std::size_t j = 0; j < p; ++j) {
        out.probabilities.push_back(dirichlet_sample(rng, alpha));
        double cum = 0.0;
        for (std::size_t l = 0; l + 1 < alpha.size(); ++l) {
            cum += out.probabilities[j][l];
            cuts[j].push_back(boost::math::quantile(standard, std::min(cum, 1.0 - 1e-16)));
        }
    }

    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p),
                                                  kLatentCorrelation);
    r.diagonal().setOnes();
    out.latent = mvnormal_sample(rng, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p)), SpdMatrix(r), spec.n);

    for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const double z = out.latent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            std::size_t level = 0;
            while (level < cuts[j].size() && z > cuts[j][level]) ++level;
            out.data.set_level(i, j, level);
        }
    return out;
}

inline DataMatrix gen_categorical(const DesignSpec& spec, SeededRng& rng) {
    return gen_categorical_detailed(spec, rng).data;
}

// ----------------------------------------------------------------------------
// Continuous designs
// ----------------------------------------------------------------------------

inline Eigen::VectorXd design_mean(std::size_t p) {
    Eigen::VectorXd mu(static_cast<Eigen::Index>(p));
    for (std::size_t k = 0; k < p; ++k) mu[static_cast<Eigen::Index>(k)] = 2.0 + static_cast<double>(k);
    return mu;
}

/// D3: 9 I + 6.3 J (or 9 on the diagonal with `rho07`). D4-D7: sigma_kk = k,
/// sigma_kl = 0.7 sqrt(k l), with 1-based k, l.
inline SpdMatrix design_covariance(Design d, std::size_t p, bool rho07 = false) {
    const auto dim = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd s(dim, dim);
    if (d == Design::D3) {
        s.setConstant(6.3);
        s.diagonal().array() = rho07 ? 9.0 : 15.3;
    } else {
        for (Eigen::Index k = 0; k < dim; ++k)
            for (Eigen::Index l = 0; l < dim; ++l)
                s(k, l) = k == l ? static_cast<double>(k + 1) : 0.7 * std::sqrt(static_cast<double>((k + 1) * (l + 1)));
    }
    return SpdMatrix(std::move(s));
}

inline ScalarDist design_noise(Design d) {
    switch (d) {
        case Design::D4: return dist::Chi2{3.0};
        case Design::D5: return dist::Chi2{30.0};
        case Design::D6: return dist::LogNormal{0.0, 1.0};
        case Design::D7: return dist::LogNormal{0.0, 2.0};
        default: return dist::Normal{};
    }
}

inline Schema continuous_schema(std::size_t p) {
    Schema s;
    for (std::size_t j = 0; j < p; ++j) s.push_back({"X" + std::to_string(j + 1), ColumnKind::continuous()});
    return s;
}

/// Rows mu + S^(1/2) e with S^(1/2) the symmetric root; e is standard normal
/// for D3 and raw (uncentred) chi-square / log-normal noise for D4-D7.
inline DataMatrix gen_continuous(const DesignSpec& spec, SeededRng& rng) {
    if (is_categorical_design(spec.design)) throw InvalidArgument(design_name(spec.design) + " is categorical");
    if (spec.p < 1) throw InvalidArgument("design needs p >= 1");
    const Eigen::VectorXd mu = design_mean(spec.p);
    const Eigen::MatrixXd root = chol_or_sqrt(design_covariance(spec.design, spec.p, spec.rho07));
    const ScalarDist noise = design_noise(spec.design);
    DataMatrix out(continuous_schema(spec.p), spec.n);
    Eigen::VectorXd e(static_cast<Eigen::Index>(spec.p));
    for (std::size_t i = 0; i < spec.n; ++i) {
        const auto draws = sample(rng, noise, spec.p);
        for (std::size_t k = 0; k < spec.p; ++k) e[static_cast<Eigen::Index>(k)] = draws[k];
        const Eigen::VectorXd y = mu + root * e;
        for (std::size_t k = 0; k < spec.p; ++k) out.set_real(i, k, y[static_cast<Eigen::Index>(k)]);
    }
    return out;
}

inline DataMatrix generate(const DesignSpec& spec) {
    SeededRng rng(spec.seed, "design", {static_cast<std::uint64_t>(spec.design)});
    return is_categorical_design(spec.design) ? gen_categorical(spec, rng) : gen_continuous(spec, rng);
}

}  // namespace missboopf
