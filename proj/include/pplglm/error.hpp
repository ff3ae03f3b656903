#pragma once

#include <stdexcept>
#include <string>

namespace pplglm {

/// Broad failure classes. The CLI maps each one to a process exit code.
enum class ErrorKind {
    Config,      ///< bad option, unknown family, malformed scenario
    Data,        ///< domain violation or malformed input data
    EmptyModel,  ///< the lasso selected no covariates
    Numeric,     ///< non-convergence, singular systems, remote supports
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Data: return 3;
        case ErrorKind::EmptyModel: return 4;
        case ErrorKind::Numeric: return 5;
    }
    return 1;
}

}  // namespace pplglm
