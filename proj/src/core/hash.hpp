#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rewarddance {

// Lower-case hex SHA-1 of "blob <size>\0" followed by the content, as git
// computes object ids.
std::string git_blob_sha1(std::string_view content);
std::string git_blob_sha1_file(const std::filesystem::path& path);

} // namespace rewarddance
