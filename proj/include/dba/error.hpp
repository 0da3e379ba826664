// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace dba {

/// Broad failure class; maps onto process exit codes.
enum class ErrorKind {
    config,     // bad configuration or usage          -> exit 1
    data,       // bad or missing data                 -> exit 2
    transport,  // network / backend unreachable       -> exit 3
};

/// Pipeline stage a failure belongs to, when applicable.
enum class Stage { none, extract, bridge, generate };

constexpr std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::extract: return "extract";
        case Stage::bridge: return "bridge";
        case Stage::generate: return "generate";
        default: return "none";
    }
}

constexpr std::string_view to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::config: return "config";
        case ErrorKind::data: return "data";
        default: return "transport";
    }
}

/// Error type used across the library. Carries a machine-readable code
/// (e.g. "not_found", "fixture_miss") plus an optional stage tag.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message, Stage stage = Stage::none)
        : std::runtime_error(message), kind_(kind), code_(std::move(code)), stage_(stage) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }
    Stage stage() const noexcept { return stage_; }

    int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::config: return 1;
            case ErrorKind::data: return 2;
            default: return 3;
        }
    }

    Error with_stage(Stage s) const { return Error(kind_, code_, what(), s); }

private:
    ErrorKind kind_;
    std::string code_;
    Stage stage_;
};

inline Error config_error(const std::string& message, std::string code = "config") {
    return Error(ErrorKind::config, std::move(code), message);
}

inline Error data_error(const std::string& message, std::string code = "data") {
    return Error(ErrorKind::data, std::move(code), message);
}

inline Error transport_error(const std::string& message, std::string code = "transport") {
    return Error(ErrorKind::transport, std::move(code), message);
}

}  // namespace dba
