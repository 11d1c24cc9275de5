#pragma once
#include <stdexcept>
#include <string>

namespace imcdse {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// bad call or missing input; maps to CLI exit 2
struct UsageError : Error { using Error::Error; };
// input outside the physical or fitted domain
struct DomainError : Error { using Error::Error; };
struct FitError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };

} // namespace imcdse
