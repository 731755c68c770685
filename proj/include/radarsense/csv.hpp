#pragma once

// Minimal comma-separated reader/writer for the project's numeric tables.

#include "radarsense/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace radarsense::csv {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

/// Parsed table: header names plus numeric rows. Row numbers in errors are
/// 1-based data rows (the header is row 0).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name, const std::string& source) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw ParseError(source + ": missing column '" + std::string(name) + "'");
    }
};

inline double parse_double(const std::string& field, const std::string& where) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    if (!field.empty() && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError(where + ": cannot parse number '" + field + "'");
    }
    return value;
}

inline Table read_stream(std::istream& in, const std::string& source) {
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source + ": empty file, header required");
    table.header = split(line);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split(line);
        const std::string where = source + ": row " + std::to_string(row);
        if (fields.size() != table.header.size()) {
            throw ParseError(where + ": expected " + std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        std::vector<double> values;
        values.reserve(fields.size());
        for (const auto& f : fields) values.push_back(parse_double(f, where));
        table.rows.push_back(std::move(values));
    }
    return table;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    return read_stream(in, path);
}

/// Shortest round-trip representation.
inline std::string fmt(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace radarsense::csv
