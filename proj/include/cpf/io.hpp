#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace cpf::io {

/// Throws IoError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// see a partial file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace cpf::io
