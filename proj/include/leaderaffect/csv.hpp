#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace leaderaffect::csv {

using Row = std::vector<std::string>;

struct Table {
    Row header;
    std::vector<Row> rows;
    /// 1-based line number of each data row in the source (for error messages).
    std::vector<std::size_t> lines;

    /// Index of a header column, or -1.
    int column(std::string_view name) const;
};

/// RFC 4180 parsing: quoted fields, doubled quotes, CRLF or LF line endings.
Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

std::string escape(std::string_view field);
std::string format_row(const Row& row);

std::string trim(std::string_view s);

}  // namespace leaderaffect::csv
