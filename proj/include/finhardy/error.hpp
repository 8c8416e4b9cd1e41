#pragma once

#include <stdexcept>
#include <string>

namespace finhardy {

enum class ErrorKind {
    ZeroInput,
    InvalidArgument,
    FeatureUnderresolved,
    EmptyDomain,
    NonFinite,
    NonConvergence,
    NormMismatch,
    DomainError,
    ResolutionGuard,
    ZeroDenominator,
    UndefinedGradient,
    Parse,
    Validation,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace finhardy
