// Coverage harness command line.
//
//   tsplit run --config <path> [--reps N] [--seed S] [--out DIR] [--workers K]
//   tsplit oracle --config <path> [--truncation T] [--sim-n N] [--seed S]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error (including
// experiments with >= 5% failed replications).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "tsplit/harness/config.hpp"
#include "tsplit/harness/experiment.hpp"
#include "tsplit/harness/report.hpp"
#include "tsplit/inference.hpp"
#include "tsplit/selection.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

int exit_code_for(const tsplit::Error& e) {
    return e.kind() == tsplit::ErrorKind::Config || e.kind() == tsplit::ErrorKind::Io ? kConfigError : kRuntimeError;
}

void print_summary(const tsplit::CoverageReport& r, const tsplit::ExperimentConfig& cfg) {
    std::printf("replications   %zu (%zu failed)\n", r.records.size(), r.failures);
    std::printf("coverage       %.4f  (mc se %.4f, nominal %.4f)\n", r.coverage, r.mc_stderr, 1.0 - cfg.alpha);
    std::printf("P(m in M*)     %.4f\n", r.p_in_mstar);
    std::printf("mean sigma*    %.6g\n", r.mean_sigma_star);
    std::printf("median width   %.6g\n", r.median_half_width);
    for (const auto& [model, count] : r.model_frequency) std::printf("  model {%s}  %zu\n", model.c_str(), count);
    for (const auto& [reason, count] : r.failure_reasons) std::printf("  failed %s  %zu\n", reason.c_str(), count);
}

int run_command(const std::string& config_path, std::optional<std::size_t> reps, std::optional<std::uint64_t> seed,
                std::optional<std::string> out, std::optional<std::size_t> workers) {
    tsplit::ExperimentConfig cfg;
    try {
        cfg = tsplit::load_config(config_path);
    } catch (const tsplit::Error& e) {
        std::cerr << "tsplit: " << config_path << ": " << e.what() << "\n";
        return kConfigError;
    }
    if (reps) {
        if (*reps == 0) {
            std::cerr << "tsplit: --reps must be >= 1\n";
            return kConfigError;
        }
        cfg.replications = *reps;
    }
    if (seed) cfg.base_seed = *seed;
    if (out) cfg.output = *out;

    try {
        const tsplit::CoverageReport report = tsplit::run_experiment(cfg, tsplit::resolve_workers(workers));
        tsplit::emit_report(report, cfg, cfg.output);
        print_summary(report, cfg);
        return 0;
    } catch (const tsplit::ExperimentFailure& e) {
        try {
            tsplit::emit_report(e.report(), cfg, cfg.output);
        } catch (const tsplit::Error& io) {
            std::cerr << "tsplit: " << io.what() << "\n";
        }
        std::cerr << "tsplit: experiment failed: " << e.what() << "\n";
        return kRuntimeError;
    } catch (const tsplit::Error& e) {
        std::cerr << "tsplit: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int oracle_command(const std::string& config_path, std::size_t truncation, std::size_t sim_n, std::uint64_t seed) {
    tsplit::ExperimentConfig cfg;
    try {
        cfg = tsplit::load_config(config_path);
    } catch (const tsplit::Error& e) {
        std::cerr << "tsplit: " << config_path << ": " << e.what() << "\n";
        return kConfigError;
    }
    try {
        const auto settings = tsplit::settings_from(cfg);
        nlohmann::ordered_json j;
        j["dgp"] = tsplit::config_json(cfg)["dgp"];
        j["truncation"] = truncation;
        j["simulation_n"] = sim_n;
        nlohmann::ordered_json models = nlohmann::ordered_json::array();
        for (const auto& model : settings.candidates.models()) {
            nlohmann::ordered_json m;
            m["model"] = model.label();
            m["in_mstar"] = tsplit::in_mstar(cfg.mstar, cfg.dgp, model);
            try {
                m["target"] = tsplit::oracle_target(cfg.dgp, model);
                const auto lrv = tsplit::long_run_covariance_oracle(cfg.dgp, model, truncation, sim_n, seed);
                const double sd = tsplit::delta_method_sd(cfg.dgp, lrv);
                m["delta_method_sd"] = sd;
                m["expected_half_width"] =
                    tsplit::normal_quantile(1.0 - cfg.alpha / 2.0) * sd / std::sqrt(static_cast<double>(cfg.n_half));
            } catch (const tsplit::Error& e) {
                m["error"] = std::string(tsplit::to_string(e.kind()));
            }
            models.push_back(m);
        }
        j["models"] = models;
        std::cout << j.dump(2) << "\n";
        return 0;
    } catch (const tsplit::Error& e) {
        std::cerr << "tsplit: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Post-selection inference for dependent data: coverage harness"};
    app.require_subcommand(1);

    std::string run_config;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> run_seed;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
    auto* run = app.add_subcommand("run", "Run a Monte Carlo coverage experiment");
    run->add_option("--config", run_config, "Experiment config file")->required();
    run->add_option("--reps", reps, "Override the replication count");
    run->add_option("--seed", run_seed, "Override base_seed");
    run->add_option("--out", out, "Override the output directory");
    run->add_option("--workers", workers, "Worker threads (default: TSPLIT_WORKERS or 1)");

    std::string oracle_config;
    std::size_t truncation = 50;
    std::size_t sim_n = 1'000'000;
    std::uint64_t oracle_seed = 0x5eed;
    auto* oracle = app.add_subcommand("oracle", "Print population targets and long-run variance diagnostics");
    oracle->add_option("--config", oracle_config, "Experiment config file")->required();
    oracle->add_option("--truncation", truncation, "Lag truncation of the long-run covariance")->capture_default_str();
    oracle->add_option("--sim-n", sim_n, "Simulation length for the long-run covariance")->capture_default_str();
    oracle->add_option("--seed", oracle_seed, "Simulation seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    if (*run) return run_command(run_config, reps, run_seed, out, workers);
    return oracle_command(oracle_config, truncation, sim_n, oracle_seed);
}
