#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "tsplit/error.hpp"
#include "tsplit/harness/config.hpp"
#include "tsplit/harness/experiment.hpp"

namespace tsplit {

inline constexpr const char* kReplicationsHeader =
    "rep,seed,model,beta_hat,sigma_star,ci_lo,ci_hi,target,covered,in_mstar,fail_reason";

/// One CSV line per replication, doubles at 17 significant digits. Fields a
/// failed replication never reached are left empty.
inline std::string replications_csv(const CoverageReport& report) {
    std::string out = std::string(kReplicationsHeader) + "\n";
    for (std::size_t r = 0; r < report.records.size(); ++r) {
        const auto& rec = report.records[r];
        out += std::to_string(r) + "," + std::to_string(rec.seed) + ",";
        out += rec.model_chosen ? rec.model_chosen->label() : std::string();
        out += ",";
        if (rec.ok()) {
            out += format_double(rec.beta_hat) + "," + format_double(rec.sigma_star) + "," +
                   format_double(rec.ci.lower) + "," + format_double(rec.ci.upper) + "," +
                   format_double(rec.target) + "," + (rec.covered ? "1" : "0") + "," + (rec.in_mstar ? "1" : "0");
        } else {
            out += ",,,,";
            out += rec.model_chosen ? format_double(rec.target) : std::string();
            out += ",,";
            out += rec.model_chosen ? (rec.in_mstar ? "1" : "0") : "";
        }
        out += "," + rec.fail_reason + "\n";
    }
    return out;
}

inline nlohmann::ordered_json config_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json dgp;
    dgp["kind"] = dgp_kind_name(cfg.dgp);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IidGaussian>) {
                dgp["mean"] = s.mean;
                dgp["sd"] = s.sd;
            } else if constexpr (std::is_same_v<T, Ar1>) {
                dgp["rho"] = s.rho;
                dgp["innovation_sd"] = s.innovation_sd;
            } else if constexpr (std::is_same_v<T, Ma>) {
                dgp["coefficients"] = s.coefficients;
            } else {
                dgp["beta_true"] = s.beta_true;
                dgp["design_rho"] = s.design_rho;
                dgp["cross_corr"] = s.cross_corr;
                dgp["noise_rho"] = s.noise_rho;
                dgp["noise_sd"] = s.noise_sd;
            }
        },
        cfg.dgp);

    nlohmann::ordered_json j;
    j["dgp"] = dgp;
    j["n_half"] = cfg.n_half;
    j["replications"] = cfg.replications;
    j["bootstrap_B"] = cfg.bootstrap_B;
    if (cfg.block_len)
        j["block_len"] = *cfg.block_len;
    else
        j["block_len"] = "auto";
    j["alpha"] = cfg.alpha;
    j["gap"] = cfg.gap;
    j["selector"] = selector_name(cfg.selector);
    if (cfg.max_size)
        j["max_size"] = *cfg.max_size;
    else
        j["max_size"] = covariate_count(cfg.dgp);
    j["mstar"] = to_string(cfg.mstar);
    j["base_seed"] = cfg.base_seed;
    return j;
}

inline nlohmann::ordered_json summary_json(const CoverageReport& report, const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["coverage"] = report.coverage;
    j["mc_stderr"] = report.mc_stderr;
    j["mean_sigma_star"] = report.mean_sigma_star;
    j["median_half_width"] = report.median_half_width;
    j["p_in_mstar"] = report.p_in_mstar;
    j["replications"] = report.records.size();
    j["successful"] = report.successful;
    j["failures"] = report.failures;
    j["failure_reasons"] = report.failure_reasons;
    j["model_frequency"] = report.model_frequency;
    j["config"] = config_json(cfg);
    return j;
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    out << contents;
    out.close();
    if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

/// Writes `summary.json` and `replications.csv` into `dir`.
inline void emit_report(const CoverageReport& report, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create output directory '" + dir.string() + "': " + ec.message());
    write_file(dir / "summary.json", summary_json(report, cfg).dump(2) + "\n");
    write_file(dir / "replications.csv", replications_csv(report));
}

}  // namespace tsplit
