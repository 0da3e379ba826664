// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dba/strings.hpp"

namespace dba::text {

namespace detail {

inline bool is_separator(uint32_t cp) {
    if (cp < 0x80) {
        bool alnum = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
                     (cp >= 'A' && cp <= 'Z');
        return !alnum;
    }
    // General punctuation, CJK symbols, fullwidth punctuation, NBSP,
    // Tibetan tsheg and shad marks.
    return (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F) ||
           (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
           (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65) ||
           cp == 0x00A0 || (cp >= 0x0F01 && cp <= 0x0F14) || cp == 0x0F0B || cp == 0x0F0C;
}

}  // namespace detail

/// Unicode-aware tokenization for n-gram metrics. Contiguous alphanumeric
/// runs form one token (ASCII case-folded); each Han ideograph is its own
/// token; punctuation and whitespace are dropped.
inline std::vector<std::string> tokenize(std::string_view input) {
    std::vector<std::string> tokens;
    std::string run;
    auto flush = [&] {
        if (!run.empty()) {
            tokens.push_back(run);
            run.clear();
        }
    };
    size_t i = 0;
    while (i < input.size()) {
        uint32_t cp = strings::next_codepoint(input, i);
        if (strings::is_cjk_ideograph(cp)) {
            flush();
            std::string one;
            strings::append_utf8(one, cp);
            tokens.push_back(std::move(one));
        } else if (detail::is_separator(cp) || cp == 0xFFFD) {
            flush();
        } else {
            if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
            strings::append_utf8(run, cp);
        }
    }
    flush();
    return tokens;
}

}  // namespace dba::text
