#pragma once

#include <string>
#include <string_view>

namespace affaudit {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Lowercase hex SHA-256 of a file's bytes. Throws std::runtime_error when
/// the file cannot be read.
std::string sha256_file(const std::string& path);

}  // namespace affaudit
