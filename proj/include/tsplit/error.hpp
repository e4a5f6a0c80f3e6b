#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsplit {

enum class ErrorKind {
    ParameterDomain,
    InsufficientData,
    SingularDesign,
    SelectionFailure,
    BootstrapInstability,
    ExperimentFailure,
    Config,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::ParameterDomain: return "parameter_domain";
        case ErrorKind::InsufficientData: return "insufficient_data";
        case ErrorKind::SingularDesign: return "singular_design";
        case ErrorKind::SelectionFailure: return "selection_failure";
        case ErrorKind::BootstrapInstability: return "bootstrap_instability";
        case ErrorKind::ExperimentFailure: return "experiment_failure";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind so that callers
/// (the coverage harness in particular) can tally failures by reason.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

}  // namespace tsplit
