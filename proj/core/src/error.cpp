#include "vlad/error.hpp"

namespace vlad {

std::string_view to_string(ErrorCategory category) noexcept
{
    switch (category) {
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::io: return "io";
    case ErrorCategory::model: return "model";
    case ErrorCategory::protocol: return "protocol";
    case ErrorCategory::config: return "config";
    case ErrorCategory::concurrency: return "concurrency";
    }
    return "unknown";
}

Error::Error(ErrorCategory category, const std::string& message)
    : std::runtime_error(message), category_(category)
{
}

}  // namespace vlad
