#pragma once

/** @file
 * Experiment configuration: a `key = value` text format.
 *
 * Blank lines and `#` comments are ignored. DGP parameters use the `dgp.`
 * prefix, either spelled out or via a `[dgp]` section header (`[experiment]`
 * switches back to top-level keys). Unknown or duplicate keys are errors.
 *
 *   dgp.kind            iid_gaussian | ar1 | ma | regression     (required)
 *   dgp.mean, dgp.sd                       iid_gaussian  (0, 1)
 *   dgp.rho, dgp.innovation_sd             ar1           (0, 1)
 *   dgp.coefficients                       ma            (1)     comma list
 *   dgp.beta_true                          regression    (required) comma list
 *   dgp.design_rho, dgp.cross_corr,
 *   dgp.noise_rho, dgp.noise_sd            regression    (0, 0, 0, 1)
 *   n_half                                 (required)
 *   replications (alias R)                 (required)
 *   bootstrap_B                            500
 *   block_len                              auto = floor(n^(1/3))
 *   alpha                                  0.05
 *   gap                                    0
 *   selector                               bic | threshold:<t>     (bic)
 *   max_size                               number of covariates
 *   mstar                                  all | supersets_of_true_support | true_support
 *                                          (supersets_of_true_support)
 *   base_seed                              1
 *   output                                 tsplit-out
 */

#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "tsplit/dgp.hpp"
#include "tsplit/error.hpp"
#include "tsplit/inference.hpp"
#include "tsplit/selection.hpp"

namespace tsplit {

struct ExperimentConfig {
    DgpSpec dgp = IidGaussian{};
    std::size_t n_half = 0;
    std::size_t replications = 0;
    std::size_t bootstrap_B = 500;
    std::optional<std::size_t> block_len;
    double alpha = 0.05;
    std::size_t gap = 0;
    Selector selector = BicSelector{};
    std::optional<std::size_t> max_size;  ///< nullopt = all covariates
    MstarRule mstar = MstarRule::SupersetsOfTrueSupport;
    std::uint64_t base_seed = 1;
    std::string output = "tsplit-out";

    bool operator==(const ExperimentConfig&) const = default;
};

inline std::string_view dgp_kind_name(const DgpSpec& spec) {
    switch (spec.index()) {
        case 0: return "iid_gaussian";
        case 1: return "ar1";
        case 2: return "ma";
        default: return "regression";
    }
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string selector_name(const Selector& s) {
    if (const auto* th = std::get_if<ThresholdSelector>(&s)) return "threshold:" + format_double(th->t);
    return "bic";
}

namespace detail {

struct Entry {
    std::string value;
    int line;
};

[[noreturn]] inline void config_error(const std::string& what) { fail(ErrorKind::Config, what); }

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

class KeyReader {
public:
    explicit KeyReader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::optional<std::string> take(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        current_line_ = it->second.line;
        std::string v = it->second.value;
        entries_.erase(it);
        return v;
    }

    template <class T>
    std::optional<T> take_number(const std::string& key) {
        auto text = take(key);
        if (!text) return std::nullopt;
        T value{};
        const char* begin = text->data();
        const char* end = begin + text->size();
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr != end)
            config_error("line " + std::to_string(current_line_) + ": key '" + key + "' expects a number, got '" +
                         *text + "'");
        if constexpr (std::is_floating_point_v<T>) {
            if (!std::isfinite(value)) range_error(key, "must be finite");
        }
        return value;
    }

    std::optional<std::vector<double>> take_list(const std::string& key) {
        auto text = take(key);
        if (!text) return std::nullopt;
        std::vector<double> out;
        std::string_view rest(*text);
        while (true) {
            const auto comma = rest.find(',');
            const auto item = trim(rest.substr(0, comma));
            double v{};
            auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
            if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size() || !std::isfinite(v))
                config_error("line " + std::to_string(current_line_) + ": key '" + key +
                             "' expects a comma-separated list of numbers");
            out.push_back(v);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        return out;
    }

    [[noreturn]] void range_error(const std::string& key, const std::string& what) const {
        config_error("line " + std::to_string(current_line_) + ": key '" + key + "' " + what);
    }

    void check(bool ok, const std::string& key, const std::string& what) const {
        if (!ok) range_error(key, what);
    }

    /// Any key not consumed by now is unknown (or irrelevant to dgp.kind).
    void reject_leftovers() const {
        if (entries_.empty()) return;
        const auto& [key, entry] = *entries_.begin();
        config_error("line " + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }

private:
    std::map<std::string, Entry> entries_;
    int current_line_ = 0;
};

inline std::map<std::string, Entry> tokenize(std::string_view text) {
    std::map<std::string, Entry> entries;
    std::string prefix;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') config_error("line " + std::to_string(line_no) + ": malformed section header");
            const auto name = trim(line.substr(1, line.size() - 2));
            if (name == "dgp")
                prefix = "dgp.";
            else if (name == "experiment")
                prefix.clear();
            else
                config_error("line " + std::to_string(line_no) + ": unknown section '" + std::string(name) + "'");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            config_error("line " + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) config_error("line " + std::to_string(line_no) + ": empty key");
        if (value.empty()) config_error("line " + std::to_string(line_no) + ": empty value for '" + std::string(key) + "'");
        std::string full = prefix + std::string(key);
        if (full == "R") full = "replications";
        if (entries.count(full))
            config_error("line " + std::to_string(line_no) + ": duplicate key '" + full + "'");
        entries.emplace(std::move(full), Entry{std::string(value), line_no});
    }
    return entries;
}

inline DgpSpec read_dgp(KeyReader& keys) {
    const auto kind = keys.take("dgp.kind");
    if (!kind) config_error("missing required key 'dgp.kind'");
    auto open_unit = [&](const std::string& key, double v) {
        keys.check(std::abs(v) < 1.0, key, "must satisfy |value| < 1");
        return v;
    };
    auto nonneg = [&](const std::string& key, double v) {
        keys.check(v >= 0.0, key, "must be >= 0");
        return v;
    };

    if (*kind == "iid_gaussian") {
        IidGaussian s;
        if (auto v = keys.take_number<double>("dgp.mean")) s.mean = *v;
        if (auto v = keys.take_number<double>("dgp.sd")) s.sd = nonneg("dgp.sd", *v);
        return s;
    }
    if (*kind == "ar1") {
        Ar1 s;
        if (auto v = keys.take_number<double>("dgp.rho")) s.rho = open_unit("dgp.rho", *v);
        if (auto v = keys.take_number<double>("dgp.innovation_sd")) s.innovation_sd = nonneg("dgp.innovation_sd", *v);
        return s;
    }
    if (*kind == "ma") {
        Ma s;
        if (auto v = keys.take_list("dgp.coefficients")) s.coefficients = *v;
        return s;
    }
    if (*kind == "regression") {
        RegressionDgp s;
        auto beta = keys.take_list("dgp.beta_true");
        if (!beta) config_error("missing required key 'dgp.beta_true' for dgp.kind = regression");
        s.beta_true = *beta;
        keys.check(s.p() <= kMaxEnumeratedCovariates, "dgp.beta_true", "may list at most 20 coefficients");
        if (auto v = keys.take_number<double>("dgp.design_rho")) s.design_rho = open_unit("dgp.design_rho", *v);
        if (auto v = keys.take_number<double>("dgp.noise_rho")) s.noise_rho = open_unit("dgp.noise_rho", *v);
        if (auto v = keys.take_number<double>("dgp.noise_sd")) s.noise_sd = nonneg("dgp.noise_sd", *v);
        if (auto v = keys.take_number<double>("dgp.cross_corr")) {
            s.cross_corr = open_unit("dgp.cross_corr", *v);
            if (s.p() > 1)
                keys.check(s.cross_corr > -1.0 / static_cast<double>(s.p() - 1), "dgp.cross_corr",
                           "is too negative for an equicorrelated design");
        }
        return s;
    }
    keys.range_error("dgp.kind", "must be one of iid_gaussian, ar1, ma, regression");
}

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text) {
    detail::KeyReader keys(detail::tokenize(text));
    ExperimentConfig cfg;
    cfg.dgp = detail::read_dgp(keys);

    auto n_half = keys.take_number<std::size_t>("n_half");
    if (!n_half) detail::config_error("missing required key 'n_half'");
    keys.check(*n_half >= 1, "n_half", "must be >= 1");
    cfg.n_half = *n_half;

    auto reps = keys.take_number<std::size_t>("replications");
    if (!reps) detail::config_error("missing required key 'replications'");
    keys.check(*reps >= 1, "replications", "must be >= 1");
    cfg.replications = *reps;

    if (auto v = keys.take_number<std::size_t>("bootstrap_B")) {
        keys.check(*v >= 2, "bootstrap_B", "must be >= 2");
        cfg.bootstrap_B = *v;
    }
    if (keys.has("block_len")) {
        if (auto text = keys.take("block_len"); text == "auto") {
            cfg.block_len.reset();
        } else {
            std::size_t v{};
            auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
            keys.check(ec == std::errc{} && ptr == text->data() + text->size(), "block_len",
                       "expects a positive integer or 'auto'");
            keys.check(v >= 1 && v <= cfg.n_half, "block_len", "must lie in [1, n_half]");
            cfg.block_len = v;
        }
    }
    if (auto v = keys.take_number<double>("alpha")) {
        keys.check(*v > 0.0 && *v < 1.0, "alpha", "must lie in (0, 1)");
        cfg.alpha = *v;
    }
    if (auto v = keys.take_number<std::size_t>("gap")) {
        keys.check(*v < cfg.n_half, "gap", "must be < n_half");
        cfg.gap = *v;
    }
    if (auto text = keys.take("selector")) {
        if (*text == "bic") {
            cfg.selector = BicSelector{};
        } else if (text->rfind("threshold:", 0) == 0) {
            const std::string num = text->substr(10);
            double t{};
            auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), t);
            keys.check(!num.empty() && ec == std::errc{} && ptr == num.data() + num.size() && std::isfinite(t) &&
                           t >= 0.0,
                       "selector", "threshold must be a finite number >= 0");
            cfg.selector = ThresholdSelector{t};
        } else {
            keys.range_error("selector", "must be 'bic' or 'threshold:<t>'");
        }
    }
    if (auto v = keys.take_number<std::size_t>("max_size")) {
        keys.check(*v >= 1 && *v <= covariate_count(cfg.dgp), "max_size", "must lie in [1, number of covariates]");
        cfg.max_size = *v;
    }
    if (auto text = keys.take("mstar")) {
        auto rule = parse_mstar_rule(*text);
        keys.check(rule.has_value(), "mstar", "must be all, supersets_of_true_support or true_support");
        cfg.mstar = *rule;
    }
    if (auto v = keys.take_number<std::uint64_t>("base_seed")) cfg.base_seed = *v;
    if (auto v = keys.take("output")) cfg.output = *v;

    keys.reject_leftovers();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

/// Canonical text form; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
        return s;
    };
    out << "[dgp]\n" << "kind = " << dgp_kind_name(cfg.dgp) << "\n";
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IidGaussian>) {
                out << "mean = " << format_double(s.mean) << "\nsd = " << format_double(s.sd) << "\n";
            } else if constexpr (std::is_same_v<T, Ar1>) {
                out << "rho = " << format_double(s.rho) << "\ninnovation_sd = " << format_double(s.innovation_sd)
                    << "\n";
            } else if constexpr (std::is_same_v<T, Ma>) {
                out << "coefficients = " << list(s.coefficients) << "\n";
            } else {
                out << "beta_true = " << list(s.beta_true) << "\ndesign_rho = " << format_double(s.design_rho)
                    << "\ncross_corr = " << format_double(s.cross_corr)
                    << "\nnoise_rho = " << format_double(s.noise_rho)
                    << "\nnoise_sd = " << format_double(s.noise_sd) << "\n";
            }
        },
        cfg.dgp);
    out << "\n[experiment]\n"
        << "n_half = " << cfg.n_half << "\n"
        << "replications = " << cfg.replications << "\n"
        << "bootstrap_B = " << cfg.bootstrap_B << "\n"
        << "block_len = " << (cfg.block_len ? std::to_string(*cfg.block_len) : std::string("auto")) << "\n"
        << "alpha = " << format_double(cfg.alpha) << "\n"
        << "gap = " << cfg.gap << "\n"
        << "selector = " << selector_name(cfg.selector) << "\n";
    if (cfg.max_size) out << "max_size = " << *cfg.max_size << "\n";
    out << "mstar = " << to_string(cfg.mstar) << "\n"
        << "base_seed = " << cfg.base_seed << "\n"
        << "output = " << cfg.output << "\n";
    return out.str();
}

}  // namespace tsplit
