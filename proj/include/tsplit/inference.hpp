#pragma once

/** @file
 * Confidence sets after sample splitting, population targets of selected
 * models, and one full replication of the select-then-bootstrap pipeline.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tsplit/dgp.hpp"
#include "tsplit/error.hpp"
#include "tsplit/moments.hpp"
#include "tsplit/normal_quantile.hpp"
#include "tsplit/rng.hpp"
#include "tsplit/selection.hpp"
#include "tsplit/splitboot.hpp"

namespace tsplit {

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.05;
    double center = 0.0;
    double half_width = 0.0;

    /// Membership with a 1e-12 relative slack so that degenerate (zero-width)
    /// intervals still contain a target that differs only by rounding.
    [[nodiscard]] bool contains(double value) const noexcept {
        const double slack = 1e-12 * std::max(1.0, std::abs(value));
        return value >= lower - slack && value <= upper + slack;
    }
};

/// [beta_hat - z sigma* / sqrt(n), beta_hat + z sigma* / sqrt(n)] with z the
/// 1 - alpha/2 standard normal quantile.
inline ConfidenceInterval confidence_interval(double beta_hat, double sigma_star, std::size_t n, double alpha) {
    require(std::isfinite(beta_hat), ErrorKind::ParameterDomain, "ci: beta_hat must be finite");
    require(sigma_star >= 0.0 && std::isfinite(sigma_star), ErrorKind::ParameterDomain, "ci: sigma* must be >= 0");
    require(alpha > 0.0 && alpha < 1.0, ErrorKind::ParameterDomain, "ci: alpha must lie in (0, 1)");
    require(n >= 1, ErrorKind::ParameterDomain, "ci: n must be positive");
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double hw = z * sigma_star / std::sqrt(static_cast<double>(n));
    return {beta_hat - hw, beta_hat + hw, alpha, beta_hat, hw};
}

namespace detail {

inline void require_scalar_model(const ModelSpec& model) {
    require(model.covariates() == std::vector<std::size_t>{1}, ErrorKind::ParameterDomain,
            "oracle: scalar DGPs only admit the constant model {1}");
}

inline double scalar_mean(const DgpSpec& spec) {
    if (const auto* iid = std::get_if<IidGaussian>(&spec)) return iid->mean;
    return 0.0;
}

}  // namespace detail

/// E[psi^(m)] under the DGP's stationary law.
inline MomentVector population_psi(const DgpSpec& spec, const ModelSpec& model) {
    validate(spec);
    if (const auto* reg = std::get_if<RegressionDgp>(&spec)) {
        model.check_columns(reg->p());
        const Eigen::MatrixXd r = design_correlation(*reg);
        const Eigen::VectorXd full_cross =
            r * Eigen::Map<const Eigen::VectorXd>(reg->beta_true.data(), static_cast<Eigen::Index>(reg->p()));
        Eigen::VectorXd stacked(static_cast<Eigen::Index>(model.moment_dim()));
        detail::for_each_moment(model, [&](std::size_t slot, std::size_t u, std::size_t v) {
            const auto iu = static_cast<Eigen::Index>(u - 1);
            stacked(static_cast<Eigen::Index>(slot)) =
                v == 0 ? full_cross(iu) : r(iu, static_cast<Eigen::Index>(v - 1));
        });
        return MomentVector(model, std::move(stacked), 0);
    }
    detail::require_scalar_model(model);
    Eigen::VectorXd stacked(2);
    stacked << 1.0, detail::scalar_mean(spec);
    return MomentVector(model, std::move(stacked), 0);
}

/// Population projection coefficient of `model` at its target position,
/// computed from the DGP's second moments.
inline double oracle_target(const DgpSpec& spec, const ModelSpec& model) {
    return target_coefficient(population_psi(spec, model));
}

struct LongRunCovariance {
    ModelSpec model;
    Eigen::MatrixXd matrix;
};

/// Truncated long-run covariance sum_{|h| <= T} Cov(xi_0, xi_h) of the moment
/// contributions, estimated from one long simulated path.
inline LongRunCovariance long_run_covariance_oracle(const DgpSpec& spec, const ModelSpec& model,
                                                    std::size_t truncation, std::size_t n_sim = 1'000'000,
                                                    std::uint64_t seed = 0x5eed) {
    require(n_sim >= 2 && truncation < n_sim / 2, ErrorKind::ParameterDomain,
            "lrv oracle: truncation must be well below the simulation length");
    const DataPanel panel = gen_panel(spec, (n_sim + 1) / 2, seed);
    Eigen::MatrixXd xi = per_observation_contributions(panel.values(), model);
    xi.rowwise() -= xi.colwise().mean();

    const Eigen::Index n = xi.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd sigma = inv_n * (xi.transpose() * xi);
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    for (std::size_t h = 1; h <= truncation; ++h) {
        const auto rows = n - static_cast<Eigen::Index>(h);
        const Eigen::MatrixXd gamma = inv_n * (xi.topRows(rows).transpose() * xi.bottomRows(rows));
        sigma += gamma + gamma.transpose();
    }
    return {model, std::move(sigma)};
}

/// sqrt(grad' Sigma grad) with the gradient of the target coefficient taken at
/// the population moments: the asymptotic sd of sqrt(n) (beta_hat - beta).
inline double delta_method_sd(const DgpSpec& spec, const LongRunCovariance& lrv) {
    const MomentVector psi = population_psi(spec, lrv.model);
    const Eigen::VectorXd grad = grad_g(psi, lrv.model.target_position());
    return std::sqrt(grad.dot(lrv.matrix * grad));
}

/// Which selected models count as members of M*.
enum class MstarRule { AllCandidates, SupersetsOfTrueSupport, TrueSupport };

inline std::string_view to_string(MstarRule rule) noexcept {
    switch (rule) {
        case MstarRule::AllCandidates: return "all";
        case MstarRule::SupersetsOfTrueSupport: return "supersets_of_true_support";
        case MstarRule::TrueSupport: return "true_support";
    }
    return "unknown";
}

inline std::optional<MstarRule> parse_mstar_rule(std::string_view text) {
    for (auto rule : {MstarRule::AllCandidates, MstarRule::SupersetsOfTrueSupport, MstarRule::TrueSupport})
        if (text == to_string(rule)) return rule;
    return std::nullopt;
}

/// Covariates with a nonzero coefficient; {1} for the scalar kinds.
inline std::vector<std::size_t> true_support(const DgpSpec& spec) {
    if (const auto* reg = std::get_if<RegressionDgp>(&spec)) {
        std::vector<std::size_t> support;
        for (std::size_t j = 0; j < reg->p(); ++j)
            if (reg->beta_true[j] != 0.0) support.push_back(j + 1);
        return support;
    }
    return {1};
}

inline bool in_mstar(MstarRule rule, const DgpSpec& spec, const ModelSpec& model) {
    const auto support = true_support(spec);
    switch (rule) {
        case MstarRule::AllCandidates: return true;
        case MstarRule::TrueSupport: return model.covariates() == support;
        case MstarRule::SupersetsOfTrueSupport:
            return std::includes(model.covariates().begin(), model.covariates().end(), support.begin(),
                                 support.end());
    }
    return false;
}

struct ReplicationSettings {
    DgpSpec dgp = IidGaussian{};
    std::size_t n_half = 500;
    Selector selector = BicSelector{};
    CandidateSet candidates = CandidateSet({ModelSpec({1})});
    std::size_t bootstrap_B = 500;
    std::optional<std::size_t> block_len;  ///< nullopt = floor(n^(1/3))
    double alpha = 0.05;
    std::size_t gap = 0;
    MstarRule mstar = MstarRule::SupersetsOfTrueSupport;
};

struct ReplicationRecord {
    std::uint64_t seed = 0;
    std::optional<ModelSpec> model_chosen;
    double beta_hat = 0.0;
    double sigma_star = 0.0;
    ConfidenceInterval ci;
    double target = 0.0;
    bool covered = false;
    bool in_mstar = false;
    std::string fail_reason;  ///< empty on success

    [[nodiscard]] bool ok() const noexcept { return fail_reason.empty(); }
};

/// generate 2n rows -> split -> select on the first half -> bootstrap on the
/// second half -> interval -> compare with the selected model's target.
/// Library errors are captured in `fail_reason`; the stage reached so far
/// stays filled in.
inline ReplicationRecord run_replication(const ReplicationSettings& s, std::uint64_t seed) {
    ReplicationRecord rec;
    rec.seed = seed;
    try {
        const DataPanel panel = gen_panel(s.dgp, s.n_half, substream(seed, 0));
        const SplitSample split = split_sample(panel, s.gap);
        const ModelSpec chosen = select_model(s.selector, split.first_half, s.candidates);
        rec.model_chosen = chosen;
        rec.in_mstar = in_mstar(s.mstar, s.dgp, chosen);
        rec.target = oracle_target(s.dgp, chosen);

        const BootstrapResult boot =
            bootstrap_distribution(split.second_half, chosen, s.bootstrap_B, s.block_len, substream(seed, 1));
        rec.beta_hat = boot.beta_hat;
        rec.sigma_star = boot.sigma_star;
        rec.ci = confidence_interval(boot.beta_hat, boot.sigma_star, boot.n, s.alpha);
        rec.covered = rec.ci.contains(rec.target);
    } catch (const Error& e) {
        rec.fail_reason = std::string(to_string(e.kind()));
        rec.covered = false;
    }
    return rec;
}

}  // namespace tsplit
