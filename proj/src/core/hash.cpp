#include "hash.hpp"

#include <fstream>
#include <iterator>
#include <memory>

#include <openssl/evp.h>

#include "error.hpp"

namespace rewarddance {

std::string git_blob_sha1(std::string_view content)
{
    const std::string head = "blob " + std::to_string(content.size()) + std::string(1, '\0');
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) == 1
            && EVP_DigestUpdate(ctx.get(), head.data(), head.size()) == 1
            && EVP_DigestUpdate(ctx.get(), content.data(), content.size()) == 1
            && EVP_DigestFinal_ex(ctx.get(), digest, &len) == 1,
        ErrorCode::Internal, "SHA-1 computation failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xf];
    }
    return out;
}

std::string git_blob_sha1_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return git_blob_sha1(content);
}

} // namespace rewarddance
