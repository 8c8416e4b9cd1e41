#include "finhardy/error.hpp"

namespace finhardy {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ZeroInput: return "zero input";
        case ErrorKind::InvalidArgument: return "invalid argument";
        case ErrorKind::FeatureUnderresolved: return "feature underresolved";
        case ErrorKind::EmptyDomain: return "empty domain";
        case ErrorKind::NonFinite: return "non-finite value";
        case ErrorKind::NonConvergence: return "non-convergence";
        case ErrorKind::NormMismatch: return "norm mismatch";
        case ErrorKind::DomainError: return "domain error";
        case ErrorKind::ResolutionGuard: return "resolution guard";
        case ErrorKind::ZeroDenominator: return "zero denominator";
        case ErrorKind::UndefinedGradient: return "undefined gradient";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Validation: return "validation error";
        case ErrorKind::Io: return "io error";
    }
    return "error";
}

}  // namespace finhardy
