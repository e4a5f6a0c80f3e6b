#pragma once

/** @file
 * Sample splitting and the Gaussian block multiplier bootstrap.
 *
 * The inference half (n rows) is cut into contiguous blocks. Each bootstrap
 * draw attaches one N(0,1) multiplier e_b to each centered block sum
 * S_b = sum_{i in b} (xi_i - xi_bar) of the moment contributions and forms
 *
 *     W = sum_b e_b S_b,        psi* = psi + W / n,
 *
 * i.e. psi plus n^-1/2 times the normalized multiplier sum n^-1/2 W. Given
 * the data, sqrt(n) (psi* - psi) is exactly Gaussian with covariance
 * n^-1 sum_b S_b S_b', the block estimate of the long-run covariance.
 * sigma* is the 1/B-normalized standard deviation of sqrt(n) beta*_j, which
 * is what the interval half-width z sigma* / sqrt(n) expects.
 */

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsplit/dgp.hpp"
#include "tsplit/error.hpp"
#include "tsplit/moments.hpp"
#include "tsplit/rng.hpp"

namespace tsplit {

struct SplitSample {
    Eigen::MatrixXd first_half;   ///< selection rows 1..n-gap
    Eigen::MatrixXd second_half;  ///< inference rows n+1..2n
};

/// The gap is taken from the end of the selection half, so the inference
/// half always holds exactly n rows.
inline SplitSample split_sample(const DataPanel& panel, std::size_t gap = 0) {
    const std::size_t n = panel.n_half();
    require(gap < n, ErrorKind::ParameterDomain,
            "split: gap " + std::to_string(gap) + " must be < n_half " + std::to_string(n));
    const auto& v = panel.values();
    return {v.topRows(static_cast<Eigen::Index>(n - gap)), v.bottomRows(static_cast<Eigen::Index>(n))};
}

struct IndexRange {
    std::size_t begin;  ///< inclusive, 0-based
    std::size_t end;    ///< exclusive
    [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
    bool operator==(const IndexRange&) const = default;
};

struct BlockScheme {
    std::size_t n = 0;
    std::size_t block_len = 1;
    std::vector<IndexRange> blocks;

    [[nodiscard]] std::size_t block_count() const noexcept { return blocks.size(); }
};

/// floor(n^(1/3)), at least 1, computed in integers.
constexpr std::size_t default_block_len(std::size_t n) noexcept {
    std::size_t l = 1;
    while ((l + 1) * (l + 1) * (l + 1) <= n) ++l;
    return l;
}

inline BlockScheme make_blocks(std::size_t n, std::optional<std::size_t> block_len = std::nullopt) {
    require(n >= 1, ErrorKind::ParameterDomain, "blocks: n must be positive");
    const std::size_t len = block_len.value_or(default_block_len(n));
    require(len >= 1 && len <= n, ErrorKind::ParameterDomain,
            "blocks: block_len " + std::to_string(len) + " must lie in [1, " + std::to_string(n) + "]");
    BlockScheme scheme{n, len, {}};
    scheme.blocks.reserve((n + len - 1) / len);
    for (std::size_t b = 0; b < n; b += len) scheme.blocks.push_back({b, std::min(b + len, n)});
    return scheme;
}

/// Centered block sums: row b holds S_b = sum_{i in b} (xi_i - xi_bar).
inline Eigen::MatrixXd centered_block_sums(const Eigen::MatrixXd& contributions, const BlockScheme& scheme) {
    require(contributions.rows() == static_cast<Eigen::Index>(scheme.n), ErrorKind::ParameterDomain,
            "bootstrap: contribution rows do not match the block scheme");
    const Eigen::RowVectorXd mean = contributions.colwise().mean();
    Eigen::MatrixXd sums(static_cast<Eigen::Index>(scheme.block_count()), contributions.cols());
    for (std::size_t b = 0; b < scheme.block_count(); ++b) {
        const auto& r = scheme.blocks[b];
        const auto rows = contributions.middleRows(static_cast<Eigen::Index>(r.begin), static_cast<Eigen::Index>(r.size()));
        sums.row(static_cast<Eigen::Index>(b)) =
            rows.colwise().sum() - static_cast<double>(r.size()) * mean;
    }
    return sums;
}

/// W = sum_b e_b S_b for one set of block multipliers.
inline Eigen::VectorXd multiplier_draw(const Eigen::MatrixXd& contributions, const BlockScheme& scheme,
                                       std::span<const double> multipliers) {
    require(multipliers.size() == scheme.block_count(), ErrorKind::ParameterDomain,
            "bootstrap: need one multiplier per block (" + std::to_string(scheme.block_count()) + "), got " +
                std::to_string(multipliers.size()));
    const Eigen::Map<const Eigen::VectorXd> e(multipliers.data(), static_cast<Eigen::Index>(multipliers.size()));
    return centered_block_sums(contributions, scheme).transpose() * e;
}

inline constexpr double kMaxReplicateFailureRate = 0.01;

struct BootstrapResult {
    double beta_hat = 0.0;
    std::vector<double> replicates;  ///< beta*_j at the target position, successful draws only
    double sigma_star = 0.0;
    std::size_t failures = 0;
    std::size_t n = 0;               ///< inference-half size
};

/// sqrt( B^-1 sum_j (sqrt(n) beta*_j - mean)^2 ), accumulated on deviations
/// from the first replicate.
inline double sigma_star_of(std::span<const double> replicates, std::size_t n) {
    require(!replicates.empty(), ErrorKind::InsufficientData, "sigma*: no replicates");
    const double shift = replicates.front();
    const auto count = static_cast<double>(replicates.size());
    double mean = 0.0;
    for (double r : replicates) mean += r - shift;
    mean /= count;
    double ss = 0.0;
    for (double r : replicates) {
        const double dev = (r - shift) - mean;
        ss += dev * dev;
    }
    return std::sqrt(static_cast<double>(n)) * std::sqrt(ss / count);
}

/// Throws BootstrapInstability when more than 1% of the B replicates failed.
inline void check_replicate_failures(std::size_t failures, std::size_t B) {
    if (static_cast<double>(failures) > kMaxReplicateFailureRate * static_cast<double>(B))
        fail(ErrorKind::BootstrapInstability, "bootstrap: " + std::to_string(failures) + " of " +
                                                  std::to_string(B) + " replicates had a singular Gram");
}

/// Block multipliers of replicate j come from substream(seed, j), so the
/// result does not depend on evaluation order.
inline BootstrapResult bootstrap_distribution(const Eigen::MatrixXd& second_half, const ModelSpec& model,
                                              std::size_t B, std::optional<std::size_t> block_len,
                                              std::uint64_t seed) {
    require(B >= 2, ErrorKind::ParameterDomain, "bootstrap: B must be >= 2");
    const MomentVector psi = compute_psi(second_half, model);
    const std::size_t n = psi.n_obs();
    const Eigen::Index target = static_cast<Eigen::Index>(model.target_position());

    BootstrapResult result;
    result.n = n;
    result.beta_hat = g_of_psi(psi)(target);

    const BlockScheme scheme = make_blocks(n, block_len);
    const Eigen::MatrixXd sums_t = centered_block_sums(per_observation_contributions(second_half, model), scheme).transpose();
    const double inv_n = 1.0 / static_cast<double>(n);

    result.replicates.reserve(B);
    Eigen::VectorXd e(static_cast<Eigen::Index>(scheme.block_count()));
    for (std::size_t j = 0; j < B; ++j) {
        Engine engine = make_engine(substream(seed, j));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index b = 0; b < e.size(); ++b) e(b) = normal(engine);
        const Eigen::VectorXd w = sums_t * e;
        try {
            result.replicates.push_back(g_of_psi(psi.perturbed(inv_n * w))(target));
        } catch (const Error& err) {
            if (err.kind() != ErrorKind::SingularDesign) throw;
            ++result.failures;
        }
    }
    check_replicate_failures(result.failures, B);
    result.sigma_star = sigma_star_of(result.replicates, n);
    return result;
}

}  // namespace tsplit
