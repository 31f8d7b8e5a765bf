#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace leaderaffect {

/// Writes `content` to a sibling temp file and renames it over `path`, so readers
/// only ever see the old or the complete new file. Creates parent directories.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

/// UTC timestamp, ISO-8601 with seconds resolution.
std::string utc_timestamp();

/// Fixed-point formatting independent of the global locale.
std::string format_fixed(double value, int decimals);

/// `%.6g`-style formatting used for p-values in text tables.
std::string format_sig(double value, int digits = 6);

/// Single-quotes `s` for /bin/sh.
std::string shell_quote(std::string_view s);

void replace_all(std::string& s, std::string_view from, std::string_view to);

}  // namespace leaderaffect
