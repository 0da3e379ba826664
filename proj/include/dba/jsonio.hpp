// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <cstdio>
#include <string>
#include <string_view>

#include <json.hpp>

namespace dba::jsonio {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Fixed-point formatting for byte-stable output documents.
/// Negative zero collapses to zero so "-0.000" never appears.
inline std::string fixed(double value, int decimals) {
    if (value == 0.0) value = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

inline std::string degrees(double value) { return fixed(value, 6); }
inline std::string kilometers(double value) { return fixed(value, 3); }

/// JSON string literal (quoted, escaped).
inline std::string quote(std::string_view s) { return json(std::string(s)).dump(); }

}  // namespace dba::jsonio
