#pragma once

/** @file
 * Synthetic weakly dependent triangular arrays and diagnostics for them.
 *
 * Every generator here is driven by Gaussian innovations passed through a
 * linear filter with geometric (AR) or finite (MA) memory, so the generated
 * arrays have sub-exponential marginals, constant zero mean (plus a fixed
 * offset for the i.i.d. kind) and dependence coefficients that decay faster
 * than any polynomial rate.
 */

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tsplit/error.hpp"
#include "tsplit/rng.hpp"

namespace tsplit {

struct IidGaussian {
    double mean = 0.0;
    double sd = 1.0;
    bool operator==(const IidGaussian&) const = default;
};

struct Ar1 {
    double rho = 0.0;
    double innovation_sd = 1.0;
    bool operator==(const Ar1&) const = default;
};

struct Ma {
    std::vector<double> coefficients{1.0};
    bool operator==(const Ma&) const = default;
};

/// Y_i = X_i' beta_true + u_i. Each covariate is a stationary AR(1) with unit
/// marginal variance; innovations (and hence contemporaneous values) share
/// the pairwise correlation `cross_corr`. The error u is an AR(1) with
/// innovation sd `noise_sd`, independent of X.
struct RegressionDgp {
    std::vector<double> beta_true{1.0};
    double design_rho = 0.0;
    double cross_corr = 0.0;
    double noise_rho = 0.0;
    double noise_sd = 1.0;
    bool operator==(const RegressionDgp&) const = default;

    [[nodiscard]] std::size_t p() const noexcept { return beta_true.size(); }
};

using DgpSpec = std::variant<IidGaussian, Ar1, Ma, RegressionDgp>;

/// Number of covariate columns a panel generated from `spec` carries. The
/// scalar kinds are mean-estimation problems against a constant covariate.
inline std::size_t covariate_count(const DgpSpec& spec) {
    if (const auto* reg = std::get_if<RegressionDgp>(&spec)) return reg->p();
    return 1;
}

inline void validate(const DgpSpec& spec) {
    auto finite = [](double v) { return std::isfinite(v); };
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IidGaussian>) {
                require(finite(s.mean) && finite(s.sd) && s.sd >= 0.0, ErrorKind::ParameterDomain,
                        "iid_gaussian: mean must be finite and sd >= 0");
            } else if constexpr (std::is_same_v<T, Ar1>) {
                require(finite(s.rho) && std::abs(s.rho) < 1.0, ErrorKind::ParameterDomain,
                        "ar1: |rho| must be < 1");
                require(finite(s.innovation_sd) && s.innovation_sd >= 0.0,
                        ErrorKind::ParameterDomain, "ar1: innovation_sd must be >= 0");
            } else if constexpr (std::is_same_v<T, Ma>) {
                require(!s.coefficients.empty(), ErrorKind::ParameterDomain,
                        "ma: coefficient vector must be nonempty");
                for (double c : s.coefficients)
                    require(finite(c), ErrorKind::ParameterDomain, "ma: coefficients must be finite");
            } else {
                require(!s.beta_true.empty(), ErrorKind::ParameterDomain,
                        "regression: beta_true must be nonempty");
                for (double b : s.beta_true)
                    require(finite(b), ErrorKind::ParameterDomain, "regression: beta_true must be finite");
                require(finite(s.design_rho) && std::abs(s.design_rho) < 1.0,
                        ErrorKind::ParameterDomain, "regression: |design_rho| must be < 1");
                require(finite(s.noise_rho) && std::abs(s.noise_rho) < 1.0,
                        ErrorKind::ParameterDomain, "regression: |noise_rho| must be < 1");
                require(finite(s.noise_sd) && s.noise_sd >= 0.0, ErrorKind::ParameterDomain,
                        "regression: noise_sd must be >= 0");
                require(finite(s.cross_corr) && std::abs(s.cross_corr) < 1.0,
                        ErrorKind::ParameterDomain, "regression: cross_corr must lie in (-1, 1)");
                // Equicorrelation matrix is positive definite iff c > -1/(p-1).
                if (s.p() > 1) {
                    require(s.cross_corr > -1.0 / static_cast<double>(s.p() - 1),
                            ErrorKind::ParameterDomain,
                            "regression: cross_corr too negative for an equicorrelated design");
                }
            }
        },
        spec);
}

/// One row of the triangular array: 2n observations of (Y, X_1..X_p).
/// Column 0 is the response, columns 1..p are covariates.
class DataPanel {
public:
    DataPanel(std::size_t n_half, Eigen::MatrixXd values, std::optional<DgpSpec> tag = std::nullopt)
        : n_half_(n_half), values_(std::move(values)), tag_(std::move(tag)) {
        require(n_half_ >= 1, ErrorKind::ParameterDomain, "panel: n_half must be positive");
        require(values_.rows() == static_cast<Eigen::Index>(2 * n_half_), ErrorKind::ParameterDomain,
                "panel: row count must equal 2 * n_half");
        require(values_.cols() >= 2, ErrorKind::ParameterDomain,
                "panel: need a response and at least one covariate");
        require(values_.allFinite(), ErrorKind::ParameterDomain, "panel: entries must be finite");
    }

    [[nodiscard]] std::size_t n_half() const noexcept { return n_half_; }
    [[nodiscard]] std::size_t covariates() const noexcept {
        return static_cast<std::size_t>(values_.cols() - 1);
    }
    [[nodiscard]] const Eigen::MatrixXd& values() const noexcept { return values_; }
    [[nodiscard]] const std::optional<DgpSpec>& dgp_tag() const noexcept { return tag_; }

private:
    std::size_t n_half_;
    Eigen::MatrixXd values_;
    std::optional<DgpSpec> tag_;
};

namespace detail {

// Stationary AR(1) path written into `out` using the caller's engine.
template <class Out>
void fill_ar1(Out&& out, Eigen::Index n, double rho, double innovation_sd, Engine& engine) {
    std::normal_distribution<double> normal(0.0, 1.0);
    if (n == 0) return;
    out(0) = innovation_sd / std::sqrt(1.0 - rho * rho) * normal(engine);
    for (Eigen::Index i = 1; i < n; ++i) out(i) = rho * out(i - 1) + innovation_sd * normal(engine);
}

}  // namespace detail

/// Stationary Gaussian AR(1): X_1 ~ N(0, sd^2 / (1 - rho^2)), then
/// X_{i+1} = rho X_i + eps_{i+1}.
inline std::vector<double> gen_ar1(std::size_t n, double rho, double innovation_sd, std::uint64_t seed) {
    validate(Ar1{rho, innovation_sd});
    require(n >= 1, ErrorKind::ParameterDomain, "ar1: n must be positive");
    std::vector<double> out(n);
    Engine engine = make_engine(seed);
    detail::fill_ar1([&](Eigen::Index i) -> double& { return out[static_cast<std::size_t>(i)]; },
                     static_cast<Eigen::Index>(n), rho, innovation_sd, engine);
    return out;
}

/// Finite moving average X_i = sum_k c_k eps_{i-k} of standard normal
/// innovations, with len(c) burn-in innovations drawn first.
inline std::vector<double> gen_ma(std::size_t n, std::span<const double> coefficients, std::uint64_t seed) {
    validate(Ma{{coefficients.begin(), coefficients.end()}});
    require(n >= 1, ErrorKind::ParameterDomain, "ma: n must be positive");
    const std::size_t q = coefficients.size();
    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> eps(n + q);
    for (double& e : eps) e = normal(engine);
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < q; ++k) acc += coefficients[k] * eps[q + i - k];
        out[i] = acc;
    }
    return out;
}

/// Correlation matrix shared by the covariates (and by their innovations).
inline Eigen::MatrixXd design_correlation(const RegressionDgp& spec) {
    const auto p = static_cast<Eigen::Index>(spec.p());
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(p, p, spec.cross_corr);
    r.diagonal().setOnes();
    return r;
}

inline DataPanel gen_regression_panel(const RegressionDgp& spec, std::size_t n_half, std::uint64_t seed) {
    validate(spec);
    require(n_half >= 1, ErrorKind::ParameterDomain, "regression: n_half must be positive");
    const auto rows = static_cast<Eigen::Index>(2 * n_half);
    const auto p = static_cast<Eigen::Index>(spec.p());

    const Eigen::MatrixXd chol = design_correlation(spec).llt().matrixL();
    const double rho = spec.design_rho;
    const double innovation_scale = std::sqrt(1.0 - rho * rho);

    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::MatrixXd values(rows, p + 1);
    Eigen::VectorXd z(p);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index a = 0; a < p; ++a) z(a) = normal(engine);
        const Eigen::VectorXd shock = chol * z;
        if (i == 0) {
            values.row(0).tail(p) = shock.transpose();
        } else {
            values.row(i).tail(p) = rho * values.row(i - 1).tail(p) + innovation_scale * shock.transpose();
        }
    }

    Eigen::VectorXd noise(rows);
    detail::fill_ar1([&](Eigen::Index i) -> double& { return noise(i); }, rows, spec.noise_rho,
                     spec.noise_sd, engine);

    const Eigen::Map<const Eigen::VectorXd> beta(spec.beta_true.data(), p);
    values.col(0) = values.rightCols(p) * beta + noise;
    return DataPanel(n_half, std::move(values), DgpSpec{spec});
}

/// Panel for any DGP kind. Scalar kinds become (Y = series, X = 1), so the
/// single regression coefficient is the mean.
inline DataPanel gen_panel(const DgpSpec& spec, std::size_t n_half, std::uint64_t seed) {
    validate(spec);
    if (const auto* reg = std::get_if<RegressionDgp>(&spec)) return gen_regression_panel(*reg, n_half, seed);

    const std::size_t rows = 2 * n_half;
    std::vector<double> series;
    if (const auto* iid = std::get_if<IidGaussian>(&spec)) {
        Engine engine = make_engine(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        series.resize(rows);
        for (double& v : series) v = iid->mean + iid->sd * normal(engine);
    } else if (const auto* ar = std::get_if<Ar1>(&spec)) {
        series = gen_ar1(rows, ar->rho, ar->innovation_sd, seed);
    } else {
        series = gen_ma(rows, std::get<Ma>(spec).coefficients, seed);
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), 2);
    values.col(0) = Eigen::Map<const Eigen::VectorXd>(series.data(), static_cast<Eigen::Index>(rows));
    values.col(1).setOnes();
    return DataPanel(n_half, std::move(values), spec);
}

struct SubETailReport {
    bool passed = true;
    double max_violation_ratio = 0.0;        ///< max_q ||X||_q / (k1 q)
    std::vector<double> lq_norms;            ///< entry q-1 holds ||X||_q
};

/// Empirical sub-exponential moment-growth check: ||X||_q <= k1 q for q = 1..q_max.
inline SubETailReport check_sube_tails(std::span<const double> sample, double k1, int q_max) {
    require(sample.size() >= 100, ErrorKind::InsufficientData, "sube: need at least 100 observations");
    require(k1 > 0.0, ErrorKind::ParameterDomain, "sube: k1 must be positive");
    require(q_max >= 2, ErrorKind::ParameterDomain, "sube: q_max must be >= 2");

    SubETailReport report;
    const auto n = static_cast<double>(sample.size());
    for (int q = 1; q <= q_max; ++q) {
        // Scale by the largest magnitude first so high powers do not overflow.
        double scale = 0.0;
        for (double x : sample) scale = std::max(scale, std::abs(x));
        double norm = 0.0;
        if (scale > 0.0) {
            double acc = 0.0;
            for (double x : sample) acc += std::pow(std::abs(x) / scale, q);
            norm = scale * std::pow(acc / n, 1.0 / q);
        }
        report.lq_norms.push_back(norm);
        const double ratio = norm / (k1 * q);
        report.max_violation_ratio = std::max(report.max_violation_ratio, ratio);
    }
    report.passed = report.max_violation_ratio <= 1.0;
    return report;
}

struct LagAutocov {
    std::size_t lag;
    double abs_autocov;
    bool operator==(const LagAutocov&) const = default;
};

/// |gamma(r)| for r = 0..r_max with the 1/(n - r) denominator.
inline std::vector<LagAutocov> autocov_decay_profile(std::span<const double> sample, std::size_t r_max) {
    const std::size_t n = sample.size();
    require(n >= 4 && r_max < n / 4, ErrorKind::ParameterDomain, "autocov: r_max must be < length / 4");
    double mean = 0.0;
    for (double x : sample) mean += x;
    mean /= static_cast<double>(n);

    std::vector<LagAutocov> profile;
    profile.reserve(r_max + 1);
    for (std::size_t r = 0; r <= r_max; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i + r < n; ++i) acc += (sample[i] - mean) * (sample[i + r] - mean);
        profile.push_back({r, std::abs(acc / static_cast<double>(n - r))});
    }
    return profile;
}

}  // namespace tsplit
