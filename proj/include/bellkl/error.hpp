#pragma once

#include <stdexcept>
#include <string>

namespace bellkl {

enum class ErrorCode {
    invalid_dimension,
    invalid_coefficient,
    invalid_state,
    shape_error,
    resource_limit,
    non_convergence,
    singular_ratio,
    invalid_parameter,
    io_error,
};

const char *to_string(ErrorCode code);

class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string &message);
    ErrorCode code() const noexcept { return code_; }

   private:
    ErrorCode code_;
};

}  // namespace bellkl
