#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace swamp {

// Hex SHA-1 of git's blob encoding: "blob <len>\0" + content.
std::string git_blob_sha1_hex(std::span<const std::uint8_t> content);
std::string git_blob_sha1_of_file(const std::filesystem::path& path);

}  // namespace swamp
