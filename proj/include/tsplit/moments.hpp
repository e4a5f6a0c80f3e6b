#pragma once

/** @file
 * Regression coefficients as a smooth function of sample means.
 *
 * For a model with covariates X^(m) (k columns) the moment vector stacks the
 * upper triangle of n^-1 sum X_i X_i' (row-major) followed by n^-1 sum X_i Y_i,
 * for a total dimension d = k(k+1)/2 + k. The map g sends that vector to the
 * OLS coefficients G^-1 c.
 */

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsplit/error.hpp"

namespace tsplit {

/// Reciprocal condition number below which a Gram matrix counts as singular.
inline constexpr double kSingularRcond = 1e-12;

/// An ordered covariate subset. Indices are 1-based panel columns
/// (column 0 is the response).
class ModelSpec {
public:
    ModelSpec() = default;
    explicit ModelSpec(std::vector<std::size_t> covariates, std::size_t target_position = 0)
        : covariates_(std::move(covariates)), target_(target_position) {
        require(!covariates_.empty(), ErrorKind::ParameterDomain, "model: covariate set must be nonempty");
        require(covariates_.front() >= 1, ErrorKind::ParameterDomain, "model: covariate indices start at 1");
        for (std::size_t i = 1; i < covariates_.size(); ++i)
            require(covariates_[i - 1] < covariates_[i], ErrorKind::ParameterDomain,
                    "model: covariates must be strictly increasing");
        require(target_ < covariates_.size(), ErrorKind::ParameterDomain, "model: target position out of range");
    }

    [[nodiscard]] const std::vector<std::size_t>& covariates() const noexcept { return covariates_; }
    [[nodiscard]] std::size_t size() const noexcept { return covariates_.size(); }
    [[nodiscard]] std::size_t target_position() const noexcept { return target_; }
    [[nodiscard]] std::size_t moment_dim() const noexcept { return size() * (size() + 1) / 2 + size(); }

    [[nodiscard]] bool contains(std::size_t column) const {
        return std::binary_search(covariates_.begin(), covariates_.end(), column);
    }
    [[nodiscard]] bool includes(const ModelSpec& other) const {
        return std::includes(covariates_.begin(), covariates_.end(), other.covariates_.begin(),
                             other.covariates_.end());
    }

    /// Throws unless every covariate is a valid column of a p-covariate panel.
    void check_columns(std::size_t p) const {
        require(!covariates_.empty() && covariates_.back() <= p, ErrorKind::ParameterDomain,
                "model: covariate index " + std::to_string(covariates_.empty() ? 0 : covariates_.back()) +
                    " exceeds panel width " + std::to_string(p));
    }

    /// "1;2;5"
    [[nodiscard]] std::string label() const {
        std::string out;
        for (std::size_t i = 0; i < covariates_.size(); ++i) {
            if (i) out += ';';
            out += std::to_string(covariates_[i]);
        }
        return out;
    }

    bool operator==(const ModelSpec&) const = default;

private:
    std::vector<std::size_t> covariates_;
    std::size_t target_ = 0;
};

/// psi_n^(m): stacked Gram upper triangle and cross moments.
class MomentVector {
public:
    MomentVector(ModelSpec model, Eigen::VectorXd stacked, std::size_t n_obs)
        : model_(std::move(model)), stacked_(std::move(stacked)), n_obs_(n_obs) {
        require(stacked_.size() == static_cast<Eigen::Index>(model_.moment_dim()), ErrorKind::ParameterDomain,
                "moments: stacked vector has wrong dimension");
    }

    [[nodiscard]] const ModelSpec& model() const noexcept { return model_; }
    [[nodiscard]] std::size_t k() const noexcept { return model_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return model_.moment_dim(); }
    [[nodiscard]] std::size_t n_obs() const noexcept { return n_obs_; }
    [[nodiscard]] const Eigen::VectorXd& stacked() const noexcept { return stacked_; }

    [[nodiscard]] auto gram_upper() const { return stacked_.head(gram_size()); }
    [[nodiscard]] auto cross() const { return stacked_.tail(static_cast<Eigen::Index>(k())); }

    /// Position of Gram entry (a, b), a <= b, in the stacked vector.
    [[nodiscard]] Eigen::Index gram_index(std::size_t a, std::size_t b) const noexcept {
        const std::size_t kk = k();
        return static_cast<Eigen::Index>(a * kk - a * (a - 1) / 2 + (b - a));
    }

    [[nodiscard]] Eigen::MatrixXd gram() const {
        const auto kk = static_cast<Eigen::Index>(k());
        Eigen::MatrixXd g(kk, kk);
        for (std::size_t a = 0; a < k(); ++a)
            for (std::size_t b = a; b < k(); ++b) {
                const double v = stacked_(gram_index(a, b));
                g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
                g(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
            }
        return g;
    }

    /// Same model and sample size, shifted moments.
    [[nodiscard]] MomentVector perturbed(const Eigen::VectorXd& delta) const {
        return MomentVector(model_, stacked_ + delta, n_obs_);
    }

private:
    [[nodiscard]] Eigen::Index gram_size() const noexcept {
        return static_cast<Eigen::Index>(k() * (k() + 1) / 2);
    }

    ModelSpec model_;
    Eigen::VectorXd stacked_;
    std::size_t n_obs_;
};

namespace detail {

inline void check_data(const Eigen::MatrixXd& data, const ModelSpec& model) {
    require(data.rows() >= 1, ErrorKind::InsufficientData, "moments: data has no rows");
    require(data.cols() >= 2, ErrorKind::ParameterDomain, "moments: data needs response and covariates");
    model.check_columns(static_cast<std::size_t>(data.cols() - 1));
}

// Visits each moment coordinate as (slot, column u, column v) so the sample
// mean and the per-row contributions share one summation order.
template <class F>
void for_each_moment(const ModelSpec& model, F&& f) {
    const auto& cov = model.covariates();
    const std::size_t k = cov.size();
    std::size_t slot = 0;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) f(slot++, cov[a], cov[b]);
    for (std::size_t a = 0; a < k; ++a) f(slot++, cov[a], std::size_t{0});
}

}  // namespace detail

inline MomentVector compute_psi(const Eigen::MatrixXd& data, const ModelSpec& model) {
    detail::check_data(data, model);
    const Eigen::Index n = data.rows();
    Eigen::VectorXd psi(static_cast<Eigen::Index>(model.moment_dim()));
    detail::for_each_moment(model, [&](std::size_t slot, std::size_t u, std::size_t v) {
        const auto cu = data.col(static_cast<Eigen::Index>(u));
        const auto cv = data.col(static_cast<Eigen::Index>(v));
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) acc += cu(i) * cv(i);
        psi(static_cast<Eigen::Index>(slot)) = acc / static_cast<double>(n);
    });
    return MomentVector(model, std::move(psi), static_cast<std::size_t>(n));
}

/// Row i is the summand xi_i whose column mean is compute_psi(data, model).
inline Eigen::MatrixXd per_observation_contributions(const Eigen::MatrixXd& data, const ModelSpec& model) {
    detail::check_data(data, model);
    const Eigen::Index n = data.rows();
    Eigen::MatrixXd xi(n, static_cast<Eigen::Index>(model.moment_dim()));
    detail::for_each_moment(model, [&](std::size_t slot, std::size_t u, std::size_t v) {
        xi.col(static_cast<Eigen::Index>(slot)) =
            data.col(static_cast<Eigen::Index>(u)).cwiseProduct(data.col(static_cast<Eigen::Index>(v)));
    });
    return xi;
}

/// Pivoted LU of the expanded Gram, rejecting near-singular systems.
inline Eigen::PartialPivLU<Eigen::MatrixXd> factor_gram(const MomentVector& psi) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(psi.gram());
    const double rc = lu.rcond();
    if (!(rc >= kSingularRcond))
        fail(ErrorKind::SingularDesign, "moments: Gram matrix is singular (rcond " + std::to_string(rc) + ")");
    return lu;
}

/// g(psi) = G^-1 c, all k coefficients.
inline Eigen::VectorXd g_of_psi(const MomentVector& psi) {
    return factor_gram(psi).solve(Eigen::VectorXd(psi.cross()));
}

/// Coefficient at the model's target position.
inline double target_coefficient(const MomentVector& psi) {
    return g_of_psi(psi)(static_cast<Eigen::Index>(psi.model().target_position()));
}

/// Gradient of beta_coordinate = (G^-1 c)_coordinate with respect to the
/// stacked moments. With h = G^-1 e_coordinate:
///   d/dG_aa = -h_a beta_a,  d/dG_ab = -(h_a beta_b + h_b beta_a) for a < b,
///   d/dc_a  = h_a.
inline Eigen::VectorXd grad_g(const MomentVector& psi, std::size_t coordinate) {
    require(coordinate < psi.k(), ErrorKind::ParameterDomain, "grad_g: coordinate out of range");
    const auto lu = factor_gram(psi);
    const Eigen::VectorXd beta = lu.solve(Eigen::VectorXd(psi.cross()));
    const auto k = static_cast<Eigen::Index>(psi.k());
    const Eigen::VectorXd h = lu.transpose().solve(Eigen::VectorXd::Unit(k, static_cast<Eigen::Index>(coordinate)));

    Eigen::VectorXd grad(static_cast<Eigen::Index>(psi.dim()));
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = a; b < k; ++b) {
            const auto slot = psi.gram_index(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
            grad(slot) = a == b ? -h(a) * beta(a) : -(h(a) * beta(b) + h(b) * beta(a));
        }
    grad.tail(k) = h;
    return grad;
}

}  // namespace tsplit
