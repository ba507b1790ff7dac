#include "vlad/digest.hpp"

#include "vlad/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <memory>

namespace vlad {

std::string sha256_hex(std::string_view bytes)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
        throw Error(ErrorCategory::io, "sha256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0x0f]);
    }
    return out;
}

std::string digest_of_scores(std::span<const double> scores)
{
    std::string text;
    text.reserve(scores.size() * 24);
    std::array<char, 32> buf{};
    for (double s : scores) {
        auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), s);
        text.append(buf.data(), end);
        text.push_back('\n');
    }
    return sha256_hex(text);
}

}  // namespace vlad
