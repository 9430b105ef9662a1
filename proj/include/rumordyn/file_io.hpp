#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rumordyn/errors.hpp"

namespace rumordyn {

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::missing_input, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Write via a sibling temp file and rename so failures never leave a partial output.
inline void atomic_write_text_file(const std::filesystem::path& path, const std::string& content) {
    auto dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::missing_input, "cannot write " + tmp.string());
        out << content;
        if (!out.good()) {
            std::filesystem::remove(tmp);
            raise(Errc::missing_input, "short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

// Filename-safe entity names: RFC 3986 unreserved characters pass through,
// every other byte becomes %XX (uppercase hex).
inline std::string percent_encode(const std::string& text) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char ch : text) {
        bool unreserved = (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z') ||
                          (ch >= '0' && ch <= '9') || ch == '-' || ch == '_' || ch == '.' ||
                          ch == '~';
        if (unreserved) {
            out += char(ch);
        } else {
            out += '%';
            out += hex[ch >> 4];
            out += hex[ch & 0xF];
        }
    }
    return out;
}

} // namespace rumordyn
