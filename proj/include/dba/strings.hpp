// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dba::strings {

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
    return s;
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

/// Collapse internal ASCII whitespace runs to a single space.
inline std::string collapse_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = false;
    for (char c : s) {
        if (is_ascii_space(c)) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

/// Key used for deduplication and name matching: trim, case-fold,
/// collapse internal whitespace.
inline std::string normalize_key(std::string_view s) {
    return ascii_lower(collapse_ws(trim(s)));
}

/// Normalization for prediction/label comparison: trim and case-fold only.
inline std::string normalize_match(std::string_view s) {
    return ascii_lower(trim(s));
}

/// Strip surrounding whitespace and quote characters (ASCII and the
/// common curly variants) from a model reply.
inline std::string strip_quotes(std::string_view s) {
    static const std::vector<std::string_view> quotes = {
        "\"", "'", "“", "”", "‘", "’", "「", "」"};
    std::string_view v = trim(s);
    bool changed = true;
    while (changed && !v.empty()) {
        changed = false;
        for (auto q : quotes) {
            if (v.size() >= q.size() && v.substr(0, q.size()) == q) {
                v.remove_prefix(q.size());
                changed = true;
            }
            if (v.size() >= q.size() && v.substr(v.size() - q.size()) == q) {
                v.remove_suffix(q.size());
                changed = true;
            }
        }
        v = trim(v);
    }
    return std::string(v);
}

/// Decode one UTF-8 code point starting at s[i]; advances i.
/// Malformed bytes decode as U+FFFD and advance one byte.
inline uint32_t next_codepoint(std::string_view s, size_t& i) {
    const auto byte = [&](size_t j) { return static_cast<unsigned char>(s[j]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    uint32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    if (i + len > s.size()) {
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k < len; ++k) {
        unsigned char bk = byte(i + k);
        if ((bk & 0xC0) != 0x80) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | (bk & 0x3F);
    }
    i += len;
    return cp;
}

inline void append_utf8(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

/// Han ideographs (URO, extension A, compatibility block, plane-2 extensions).
inline bool is_cjk_ideograph(uint32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
           (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x2FFFF);
}

/// FNV-1a 64-bit hash, used where a stable cross-run hash is needed.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string format_hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}  // namespace dba::strings
