#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vlad {

// Coarse failure classes; the CLI maps each to a distinct exit status.
enum class ErrorCategory {
    validation,
    io,
    model,
    protocol,
    config,
    concurrency,
};

std::string_view to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message);

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

inline Error validation_error(const std::string& message) { return {ErrorCategory::validation, message}; }
inline Error io_error(const std::string& message) { return {ErrorCategory::io, message}; }
inline Error model_error(const std::string& message) { return {ErrorCategory::model, message}; }
inline Error protocol_error(const std::string& message) { return {ErrorCategory::protocol, message}; }
inline Error config_error(const std::string& message) { return {ErrorCategory::config, message}; }

}  // namespace vlad
