#include "bellkl/error.hpp"

namespace bellkl {

const char *to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_dimension:
            return "invalid-dimension";
        case ErrorCode::invalid_coefficient:
            return "invalid-coefficient";
        case ErrorCode::invalid_state:
            return "invalid-state";
        case ErrorCode::shape_error:
            return "shape-error";
        case ErrorCode::resource_limit:
            return "resource-limit";
        case ErrorCode::non_convergence:
            return "non-convergence";
        case ErrorCode::singular_ratio:
            return "singular-ratio";
        case ErrorCode::invalid_parameter:
            return "invalid-parameter";
        case ErrorCode::io_error:
            return "io-error";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace bellkl
