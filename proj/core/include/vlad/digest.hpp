#pragma once

#include <span>
#include <string>
#include <string_view>

namespace vlad {

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Digest of a score list, formatted at round-trip precision so it is
/// stable across hosts with the same floating-point format.
std::string digest_of_scores(std::span<const double> scores);

}  // namespace vlad
