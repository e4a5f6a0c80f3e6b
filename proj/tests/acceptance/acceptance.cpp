// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances are fixed here and never tuned per run.
//
//   acceptance [--workers K] [--only N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tsplit/dgp.hpp"
#include "tsplit/harness/config.hpp"
#include "tsplit/harness/experiment.hpp"
#include "tsplit/harness/report.hpp"
#include "tsplit/inference.hpp"
#include "tsplit/moments.hpp"
#include "tsplit/splitboot.hpp"

namespace {

using namespace tsplit;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 20261014;

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ExperimentConfig mean_config(const std::string& dgp_lines, std::size_t n, std::size_t reps, std::size_t block_len) {
    return parse_config(dgp_lines + "\nn_half = " + std::to_string(n) + "\nreplications = " +
                            std::to_string(reps) + "\nbootstrap_B = 500\nalpha = 0.05\nblock_len = " +
                            std::to_string(block_len) + "\nbase_seed = " + std::to_string(kSeed) + "\n");
}

ExperimentConfig regression_config(std::size_t reps) {
    std::string text = R"(
[dgp]
kind = regression
beta_true = 1, 0.5
cross_corr = 0.5
design_rho = 0.3
noise_rho = 0.3
noise_sd = 1
[experiment]
n_half = 1000
bootstrap_B = 500
block_len = 10
alpha = 0.05
selector = bic
mstar = supersets_of_true_support
)";
    text += "replications = " + std::to_string(reps) + "\nbase_seed = " + std::to_string(kSeed) + "\n";
    return parse_config(text);
}

// 1. Conditional bootstrap variance against the exact block-sum formula.
Outcome conditional_variance(std::size_t) {
    const auto t0 = Clock::now();
    const std::size_t n = 12, len = 3;
    const auto series = gen_ar1(n, 0.5, 1.0, kSeed);
    Eigen::MatrixXd d(static_cast<Eigen::Index>(n), 2);
    for (std::size_t i = 0; i < n; ++i) d.row(static_cast<Eigen::Index>(i)) << series[i], 1.0;

    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double exact = 0.0;
    for (std::size_t b = 0; b < n; b += len) {
        double s = 0.0;
        for (std::size_t i = b; i < b + len; ++i) s += series[i] - mean;
        exact += s * s;
    }
    exact /= static_cast<double>(n);

    const auto boot = bootstrap_distribution(d, ModelSpec({1}), 200'000, len, kSeed);
    const double var = boot.sigma_star * boot.sigma_star;
    const double rel = std::abs(var / exact - 1.0);
    const double secs = seconds_since(t0);
    return {rel <= 0.01 && secs < 10.0,
            fmt("var=%.6f exact=%.6f rel_err=%.4f (<= 0.01) time=%.2fs (< 10s)", var, exact, rel, secs)};
}

// 2. Nominal coverage for the i.i.d. mean.
Outcome iid_coverage(std::size_t) {
    const auto t0 = Clock::now();
    const auto cfg = mean_config("dgp.kind = iid_gaussian\ndgp.mean = 0\ndgp.sd = 1", 500, 2000, 1);
    const auto report = run_experiment(cfg, 1);
    const double secs = seconds_since(t0);
    const bool ok = report.coverage >= 0.93 && report.coverage <= 0.97 && secs < 300.0;
    return {ok, fmt("coverage=%.4f in [0.93, 0.97] (mc se %.4f) time=%.1fs single-threaded (< 300s)",
                    report.coverage, report.mc_stderr, secs)};
}

// 3. Unit blocks undercover under AR(1) dependence; cube-root blocks recover.
Outcome dependence_matters(std::size_t workers) {
    const auto t0 = Clock::now();
    const std::string ar = "dgp.kind = ar1\ndgp.rho = 0.5\ndgp.innovation_sd = 1";
    const auto unit = run_experiment(mean_config(ar, 1000, 1000, 1), workers);
    const auto blocked = run_experiment(mean_config(ar, 1000, 1000, default_block_len(1000)), workers);
    const double predicted = 2.0 * 0.5 * std::erfc(-(1.959963984540054 / std::sqrt(3.0)) / std::sqrt(2.0)) - 1.0;
    const double secs = seconds_since(t0);
    const bool ok = unit.coverage <= 0.80 && std::abs(unit.coverage - predicted) <= 0.04 &&
                    blocked.coverage >= 0.91 && blocked.coverage <= 0.97 && secs < 600.0;
    return {ok, fmt("l=1: coverage=%.4f (<= 0.80, predicted %.4f +- 0.04); l=10: coverage=%.4f in [0.91, 0.97]; "
                    "time=%.1fs (< 600s)",
                    unit.coverage, predicted, blocked.coverage, secs)};
}

// 4. End-to-end post-selection coverage with BIC.
Outcome post_selection(std::size_t workers) {
    const auto t0 = Clock::now();
    const auto report = run_experiment(regression_config(1000), workers);
    const double secs = seconds_since(t0);
    const bool ok = report.p_in_mstar >= 0.95 && report.coverage >= 0.91 && report.coverage <= 0.97 && secs < 1200.0;
    return {ok, fmt("P(m in M*)=%.4f (>= 0.95) coverage=%.4f in [0.91, 0.97] time=%.1fs (< 1200s)",
                    report.p_in_mstar, report.coverage, secs)};
}

// 5. Bootstrap sd against the delta-method sd from the long-run covariance.
Outcome delta_method(std::size_t) {
    const auto cfg = regression_config(200);
    const ModelSpec full({1, 2});
    // Fixed model: the full model is the only candidate.
    auto settings = settings_from(cfg);
    settings.candidates = CandidateSet({full});
    std::vector<ReplicationRecord> records(cfg.replications);
    for (std::size_t r = 0; r < records.size(); ++r)
        records[r] = run_replication(settings, replication_seed(cfg.base_seed, r));
    const auto report = aggregate(std::move(records));

    const auto lrv = long_run_covariance_oracle(cfg.dgp, full, 50, 1'000'000, kSeed);
    const double oracle = delta_method_sd(cfg.dgp, lrv);
    const double rel = std::abs(report.mean_sigma_star / oracle - 1.0);
    return {report.failures == 0 && rel <= 0.10,
            fmt("mean sigma*=%.5f delta-method sd=%.5f rel_err=%.4f (<= 0.10) over %zu replications",
                report.mean_sigma_star, oracle, rel, report.successful)};
}

// 6. Analytic gradient of g against central differences.
Outcome gradient_check(std::size_t) {
    std::mt19937_64 rng(kSeed);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> kdist(1, 5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int k = kdist(rng);
        Eigen::MatrixXd a(k + 4, k);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = z(rng);
        const Eigen::MatrixXd gram = a.transpose() * a / (k + 4) + 0.5 * Eigen::MatrixXd::Identity(k, k);
        std::vector<std::size_t> cols(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) cols[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i + 1);
        const ModelSpec model(cols);
        Eigen::VectorXd stacked(static_cast<Eigen::Index>(model.moment_dim()));
        Eigen::Index s = 0;
        for (Eigen::Index r = 0; r < k; ++r)
            for (Eigen::Index c = r; c < k; ++c) stacked(s++) = gram(r, c);
        for (Eigen::Index r = 0; r < k; ++r) stacked(s++) = z(rng);
        const MomentVector psi(model, stacked, 1);

        for (std::size_t coord = 0; coord < static_cast<std::size_t>(k); ++coord) {
            const Eigen::VectorXd analytic = grad_g(psi, coord);
            Eigen::VectorXd fd(analytic.size());
            for (Eigen::Index j = 0; j < fd.size(); ++j) {
                const double h = 1e-6 * (1.0 + std::abs(stacked(j)));
                Eigen::VectorXd step = Eigen::VectorXd::Zero(fd.size());
                step(j) = h;
                const auto ci = static_cast<Eigen::Index>(coord);
                fd(j) = (g_of_psi(psi.perturbed(step))(ci) - g_of_psi(psi.perturbed(-step))(ci)) / (2.0 * h);
            }
            worst = std::max(worst, (fd - analytic).lpNorm<Eigen::Infinity>() / analytic.lpNorm<Eigen::Infinity>());
        }
    }
    return {worst <= 1e-6, fmt("max relative error %.3g over 100 draws (<= 1e-6)", worst)};
}

std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 7. One worker and eight workers write identical replications.csv.
Outcome determinism(std::size_t) {
    auto cfg = regression_config(64);
    cfg.n_half = 300;
    cfg.bootstrap_B = 200;
    cfg.block_len = 6;
    const auto root = std::filesystem::temp_directory_path() / "tsplit_acceptance_determinism";
    std::filesystem::remove_all(root);
    emit_report(run_experiment(cfg, 1), cfg, root / "w1");
    emit_report(run_experiment(cfg, 8), cfg, root / "w8");
    const auto a = read_bytes(root / "w1" / "replications.csv");
    const auto b = read_bytes(root / "w8" / "replications.csv");
    std::filesystem::remove_all(root);
    return {!a.empty() && a == b, fmt("replications.csv %zu bytes, identical=%s", a.size(), a == b ? "yes" : "no")};
}

// 8. Median half-width scales like n^-1/2.
Outcome width_scaling(std::size_t workers) {
    const std::string iid = "dgp.kind = iid_gaussian\ndgp.mean = 0\ndgp.sd = 1";
    const auto small = run_experiment(mean_config(iid, 500, 500, 1), workers);
    const auto large = run_experiment(mean_config(iid, 2000, 500, 1), workers);
    const double half = small.median_half_width / 2.0;
    const double rel = std::abs(large.median_half_width / half - 1.0);
    return {rel <= 0.15, fmt("median half-width n=500: %.5f, n=2000: %.5f, ratio to half %.4f (within 0.15 of 1)",
                             small.median_half_width, large.median_half_width, large.median_half_width / half)};
}

}  // namespace

int main(int argc, char** argv) {
    std::optional<std::size_t> workers_flag;
    int only = 0;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--workers") workers_flag = std::strtoul(argv[i + 1], nullptr, 10);
        if (flag == "--only") only = std::atoi(argv[i + 1]);
    }
    const std::size_t workers = resolve_workers(workers_flag);

    const std::vector<std::pair<const char*, std::function<Outcome(std::size_t)>>> criteria = {
        {"conditional bootstrap variance", conditional_variance},
        {"iid nominal coverage", iid_coverage},
        {"dependence matters", dependence_matters},
        {"post-selection coverage", post_selection},
        {"delta-method consistency", delta_method},
        {"gradient check", gradient_check},
        {"determinism across workers", determinism},
        {"interval width scaling", width_scaling},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only && static_cast<std::size_t>(only) != i + 1) continue;
        Outcome out{false, ""};
        try {
            out = criteria[i].second(workers);
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        failed += out.pass ? 0 : 1;
        std::printf("%s [%zu] %s: %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%s: %d criterion(s) failed\n", failed ? "FAILED" : "OK", failed);
    return failed ? 1 : 0;
}
