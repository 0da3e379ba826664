// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dba/error.hpp"

namespace dba::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Parse RFC-4180 style CSV: quoted fields may contain commas, doubled
/// quotes, and embedded newlines. Accepts both LF and CRLF line endings.
inline Table parse(std::string_view text) {
    Table table;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool any_field = false;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        any_field = false;
    };
    auto end_row = [&] {
        end_field();
        if (table.header.empty())
            table.header = std::move(row);
        else
            table.rows.push_back(std::move(row));
        row = {};
    };

    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                any_field = true;
                break;
            case ',':
                end_field();
                any_field = true;  // a comma implies a following (possibly empty) field
                break;
            case '\r':
                break;
            case '\n':
                if (!field.empty() || !row.empty() || any_field) end_row();
                break;
            default:
                field.push_back(c);
        }
    }
    if (in_quotes) throw data_error("unterminated quoted CSV field", "parse");
    if (!field.empty() || !row.empty() || any_field) end_row();
    return table;
}

inline Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open file: " + path.string(), "missing_file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

inline std::string escape(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string format_row(const std::vector<std::string>& fields) {
    std::string out;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    out.push_back('\n');
    return out;
}

}  // namespace dba::csv
