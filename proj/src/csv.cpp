#include "leaderaffect/csv.hpp"

#include "leaderaffect/errors.hpp"

#include <fstream>
#include <sstream>

namespace leaderaffect::csv {

int Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

Table parse(std::string_view text) {
    Table table;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t row_line = 1;

    auto end_row = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
        const bool blank = row.size() == 1 && row[0].empty();
        if (!blank) {
            if (table.header.empty() && table.rows.empty()) {
                table.header = std::move(row);
            } else {
                table.rows.push_back(std::move(row));
                table.lines.push_back(row_line);
            }
        }
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (field_started && !field.empty()) {
                throw SchemaError("line " + std::to_string(line) + ": stray quote inside unquoted field");
            }
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            row.push_back(std::move(field));
            field.clear();
            field_started = false;
            break;
        case '\r':
            break;
        case '\n':
            end_row();
            ++line;
            row_line = line;
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw SchemaError("unterminated quoted field at end of input");
    if (!field.empty() || !row.empty()) end_row();
    // strip UTF-8 BOM from the first header cell
    if (!table.header.empty() && table.header[0].rfind("\xEF\xBB\xBF", 0) == 0) {
        table.header[0].erase(0, 3);
    }
    return table;
}

Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse(ss.str());
    } catch (const SchemaError& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

std::string escape(std::string_view field) {
    const bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_row(const Row& row) {
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(row[i]);
    }
    out.push_back('\n');
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace leaderaffect::csv
