#pragma once

#include <string>
#include <vector>

#include "rumordyn/errors.hpp"

namespace rumordyn::csv {

// RFC-4180-style field splitting: double quotes guard commas and embedded quotes.
inline std::vector<std::string> parse_line(const std::string& line, size_t line_no = 0) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"' && cur.empty()) {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch == '\r' && i + 1 == line.size()) {
            // tolerate CRLF input
        } else {
            cur += ch;
        }
    }
    if (quoted)
        raise(Errc::parse_error, "unterminated quote on line " + std::to_string(line_no));
    fields.push_back(cur);
    return fields;
}

inline std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += "\"\"";
        else out += ch;
    }
    out += '"';
    return out;
}

} // namespace rumordyn::csv
