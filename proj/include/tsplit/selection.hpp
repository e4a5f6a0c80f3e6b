#pragma once

/** @file
 * Model selection on the selection half of a split sample.
 *
 * Selectors only ever receive the selection-half matrix; they are pure
 * functions of it and always return a member of the candidate set.
 */

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tsplit/error.hpp"
#include "tsplit/moments.hpp"

namespace tsplit {

class CandidateSet {
public:
    explicit CandidateSet(std::vector<ModelSpec> models) : models_(std::move(models)) {
        require(!models_.empty(), ErrorKind::ParameterDomain, "candidates: set must be nonempty");
        for (std::size_t i = 0; i < models_.size(); ++i) {
            max_size_ = std::max(max_size_, models_[i].size());
            for (std::size_t j = 0; j < i; ++j)
                require(models_[i].covariates() != models_[j].covariates(), ErrorKind::ParameterDomain,
                        "candidates: duplicate model {" + models_[i].label() + "}");
        }
    }

    [[nodiscard]] const std::vector<ModelSpec>& models() const noexcept { return models_; }
    [[nodiscard]] std::size_t size() const noexcept { return models_.size(); }
    [[nodiscard]] std::size_t max_size() const noexcept { return max_size_; }
    [[nodiscard]] const ModelSpec& operator[](std::size_t i) const { return models_[i]; }

    [[nodiscard]] std::optional<std::size_t> find(const std::vector<std::size_t>& covariates) const {
        for (std::size_t i = 0; i < models_.size(); ++i)
            if (models_[i].covariates() == covariates) return i;
        return std::nullopt;
    }

private:
    std::vector<ModelSpec> models_;
    std::size_t max_size_ = 0;
};

inline constexpr std::size_t kMaxEnumeratedCovariates = 20;

/// All nonempty subsets of {1..p} with at most max_size elements, ordered by
/// size and then lexicographically: p = 2 gives {1}, {2}, {1,2}.
inline CandidateSet enumerate_candidates(std::size_t p, std::size_t max_size) {
    require(p <= kMaxEnumeratedCovariates, ErrorKind::ParameterDomain,
            "candidates: p = " + std::to_string(p) + " exceeds the enumeration limit of 20");
    require(max_size >= 1 && max_size <= p, ErrorKind::ParameterDomain,
            "candidates: need 1 <= max_size <= p");

    std::vector<ModelSpec> models;
    std::vector<std::size_t> combo;
    for (std::size_t size = 1; size <= max_size; ++size) {
        combo.resize(size);
        for (std::size_t i = 0; i < size; ++i) combo[i] = i + 1;
        while (true) {
            models.emplace_back(combo);
            // Advance to the next combination in lexicographic order.
            std::size_t i = size;
            while (i > 0 && combo[i - 1] == p - size + i) --i;
            if (i == 0) break;
            ++combo[i - 1];
            for (std::size_t j = i; j < size; ++j) combo[j] = combo[j - 1] + 1;
        }
    }
    return CandidateSet(std::move(models));
}

/// Residual sum of squares of the OLS fit of column 0 on the model columns.
inline double residual_sum_of_squares(const Eigen::MatrixXd& data, const ModelSpec& model) {
    const Eigen::VectorXd beta = g_of_psi(compute_psi(data, model));
    Eigen::VectorXd resid = data.col(0);
    for (std::size_t a = 0; a < model.size(); ++a)
        resid -= beta(static_cast<Eigen::Index>(a)) * data.col(static_cast<Eigen::Index>(model.covariates()[a]));
    return resid.squaredNorm();
}

/// n log(RSS / n) + |m| log n.
inline double bic_score(const Eigen::MatrixXd& data, const ModelSpec& model) {
    const auto n = static_cast<double>(data.rows());
    return n * std::log(residual_sum_of_squares(data, model) / n) + static_cast<double>(model.size()) * std::log(n);
}

/// BIC argmin over the candidates; ties go to the earliest candidate.
/// Candidates whose fit is singular are skipped.
inline ModelSpec select_bic(const Eigen::MatrixXd& first_half, const CandidateSet& candidates) {
    if (candidates.size() == 1) return candidates[0];
    require(first_half.rows() > static_cast<Eigen::Index>(candidates.max_size() + 1), ErrorKind::InsufficientData,
            "select_bic: selection half too short for the largest candidate");

    std::optional<std::size_t> best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double score;
        try {
            score = bic_score(first_half, candidates[i]);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::SingularDesign) continue;
            throw;
        }
        if (!best || score < best_score) {
            best = i;
            best_score = score;
        }
    }
    if (!best) fail(ErrorKind::SelectionFailure, "select_bic: every candidate fit is singular");
    return candidates[*best];
}

/// Fit the full model, keep covariates with |beta_j| > t and return the
/// matching candidate, or the smallest candidate containing the survivors.
/// If nothing survives, returns the best-BIC singleton candidate.
inline ModelSpec select_threshold(const Eigen::MatrixXd& first_half, const CandidateSet& candidates, double t) {
    require(t >= 0.0 && std::isfinite(t), ErrorKind::ParameterDomain, "select_threshold: t must be finite and >= 0");
    const auto p = static_cast<std::size_t>(first_half.cols() - 1);
    std::vector<std::size_t> all(p);
    for (std::size_t j = 0; j < p; ++j) all[j] = j + 1;
    const Eigen::VectorXd beta = g_of_psi(compute_psi(first_half, ModelSpec(all)));

    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < p; ++j)
        if (std::abs(beta(static_cast<Eigen::Index>(j))) > t) kept.push_back(j + 1);

    if (kept.empty()) {
        std::vector<ModelSpec> singletons;
        for (const auto& m : candidates.models())
            if (m.size() == 1) singletons.push_back(m);
        if (singletons.empty())
            fail(ErrorKind::SelectionFailure, "select_threshold: nothing survived and no singleton candidate exists");
        return select_bic(first_half, CandidateSet(std::move(singletons)));
    }

    const ModelSpec survivors(kept);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!candidates[i].includes(survivors)) continue;
        if (!best || candidates[i].size() < candidates[*best].size()) best = i;
    }
    if (!best)
        fail(ErrorKind::SelectionFailure,
             "select_threshold: no candidate contains {" + survivors.label() + "}");
    return candidates[*best];
}

struct BicSelector {
    bool operator==(const BicSelector&) const = default;
};
struct ThresholdSelector {
    double t = 0.0;
    bool operator==(const ThresholdSelector&) const = default;
};
using Selector = std::variant<BicSelector, ThresholdSelector>;

inline ModelSpec select_model(const Selector& selector, const Eigen::MatrixXd& first_half,
                              const CandidateSet& candidates) {
    if (const auto* th = std::get_if<ThresholdSelector>(&selector))
        return select_threshold(first_half, candidates, th->t);
    return select_bic(first_half, candidates);
}

}  // namespace tsplit
