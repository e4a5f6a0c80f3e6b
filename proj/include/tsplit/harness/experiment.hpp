#pragma once

/** @file
 * Monte Carlo coverage experiment: R independent replications of the
 * select-then-bootstrap pipeline on a bounded worker pool.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tsplit/error.hpp"
#include "tsplit/harness/config.hpp"
#include "tsplit/inference.hpp"
#include "tsplit/rng.hpp"
#include "tsplit/selection.hpp"

namespace tsplit {

/// Experiments with at least this share of failed replications are errors.
inline constexpr double kMaxReplicationFailureRate = 0.05;

struct CoverageReport {
    double coverage = 0.0;
    double mc_stderr = 0.0;
    double mean_sigma_star = 0.0;
    double median_half_width = 0.0;
    double p_in_mstar = 0.0;
    std::size_t successful = 0;
    std::size_t failures = 0;
    std::map<std::string, std::size_t> model_frequency;
    std::map<std::string, std::size_t> failure_reasons;
    std::vector<ReplicationRecord> records;  ///< ordered by replication index
};

/// Thrown when too many replications failed; still carries the full report.
class ExperimentFailure : public Error {
public:
    explicit ExperimentFailure(CoverageReport report)
        : Error(ErrorKind::ExperimentFailure, describe(report)), report_(std::move(report)) {}

    [[nodiscard]] const CoverageReport& report() const noexcept { return report_; }

private:
    static std::string describe(const CoverageReport& r) {
        std::string s = std::to_string(r.failures) + " of " + std::to_string(r.records.size()) +
                        " replications failed:";
        for (const auto& [reason, count] : r.failure_reasons) s += " " + reason + "=" + std::to_string(count);
        return s;
    }

    CoverageReport report_;
};

inline ReplicationSettings settings_from(const ExperimentConfig& cfg) {
    const std::size_t p = covariate_count(cfg.dgp);
    ReplicationSettings s;
    s.dgp = cfg.dgp;
    s.n_half = cfg.n_half;
    s.selector = cfg.selector;
    s.candidates = enumerate_candidates(p, cfg.max_size.value_or(p));
    s.bootstrap_B = cfg.bootstrap_B;
    s.block_len = cfg.block_len;
    s.alpha = cfg.alpha;
    s.gap = cfg.gap;
    s.mstar = cfg.mstar;
    return s;
}

/// --workers beats TSPLIT_WORKERS, which beats 1.
inline std::size_t resolve_workers(std::optional<std::size_t> requested) {
    if (requested) return std::max<std::size_t>(1, *requested);
    if (const char* env = std::getenv("TSPLIT_WORKERS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 1;
}

inline CoverageReport aggregate(std::vector<ReplicationRecord> records) {
    CoverageReport rep;
    std::size_t covered = 0;
    std::size_t in_mstar = 0;
    double sigma_sum = 0.0;
    std::vector<double> widths;
    for (const auto& r : records) {
        if (!r.ok()) {
            ++rep.failures;
            ++rep.failure_reasons[r.fail_reason];
            continue;
        }
        ++rep.successful;
        covered += r.covered ? 1 : 0;
        in_mstar += r.in_mstar ? 1 : 0;
        sigma_sum += r.sigma_star;
        widths.push_back(r.ci.half_width);
        ++rep.model_frequency[r.model_chosen->label()];
    }
    if (rep.successful > 0) {
        const auto n = static_cast<double>(rep.successful);
        rep.coverage = static_cast<double>(covered) / n;
        rep.mc_stderr = std::sqrt(rep.coverage * (1.0 - rep.coverage) / n);
        rep.mean_sigma_star = sigma_sum / n;
        rep.p_in_mstar = static_cast<double>(in_mstar) / n;
        std::sort(widths.begin(), widths.end());
        const std::size_t mid = widths.size() / 2;
        rep.median_half_width = widths.size() % 2 ? widths[mid] : 0.5 * (widths[mid - 1] + widths[mid]);
    }
    rep.records = std::move(records);
    return rep;
}

/// Replication r runs with seed base_seed ^ splitmix64(r); records are
/// placed by index, so the report does not depend on the worker count.
inline CoverageReport run_experiment(const ExperimentConfig& cfg, std::size_t workers = 1) {
    const ReplicationSettings settings = settings_from(cfg);
    std::vector<ReplicationRecord> records(cfg.replications);

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t r = next++; r < records.size(); r = next++)
            records[r] = run_replication(settings, replication_seed(cfg.base_seed, r));
    };
    workers = std::clamp<std::size_t>(workers, 1, records.size());
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    CoverageReport report = aggregate(std::move(records));
    if (static_cast<double>(report.failures) >= kMaxReplicationFailureRate * static_cast<double>(cfg.replications))
        throw ExperimentFailure(std::move(report));
    return report;
}

}  // namespace tsplit
