#pragma once

// Whole-file helpers and SHA-256 digests. Failures throw IoError.

#include <string>
#include <string_view>

namespace xbar {

std::string read_file(const std::string& path);
/// Writes atomically enough for our purposes: truncate, write, check.
void write_file(const std::string& path, std::string_view bytes);

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

}  // namespace xbar
