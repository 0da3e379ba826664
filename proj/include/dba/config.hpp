// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dba/dataset.hpp"
#include "dba/error.hpp"
#include "dba/eval.hpp"
#include "dba/llm.hpp"
#include "dba/strings.hpp"

namespace dba::config {

/// INI-style file: [section] headers, key = value lines, # or ; comments.
class IniFile {
public:
    static IniFile parse(const std::string& text) {
        IniFile ini;
        std::istringstream in(text);
        std::string line, section;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            auto t = strings::trim(line);
            if (t.empty() || t.front() == '#' || t.front() == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw config_error("unterminated section header at line " +
                                       std::to_string(line_no));
                section = std::string(strings::trim(t.substr(1, t.size() - 2)));
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string_view::npos)
                throw config_error("expected key = value at line " + std::to_string(line_no));
            std::string key = std::string(strings::trim(t.substr(0, eq)));
            std::string value = std::string(strings::trim(t.substr(eq + 1)));
            if (key.empty())
                throw config_error("empty key at line " + std::to_string(line_no));
            ini.values_[section + "." + key] = value;
        }
        return ini;
    }

    static IniFile load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw config_error("cannot open config file: " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    std::optional<std::string> get(const std::string& dotted_key) const {
        auto it = values_.find(dotted_key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    std::string get_or(const std::string& key, std::string fallback) const {
        auto v = get(key);
        return v ? *v : std::move(fallback);
    }

    double get_double(const std::string& key, double fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        try {
            return std::stod(*v);
        } catch (const std::exception&) {
            throw config_error("field " + key + " must be numeric, got '" + *v + "'");
        }
    }

    int get_int(const std::string& key, int fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        try {
            return std::stoi(*v);
        } catch (const std::exception&) {
            throw config_error("field " + key + " must be an integer, got '" + *v + "'");
        }
    }

    /// Collect templates.style_1 .. style_N in index order.
    std::vector<std::string> styles(const std::string& section) const {
        std::vector<std::string> out;
        for (int i = 1;; ++i) {
            auto v = get(section + ".style_" + std::to_string(i));
            if (!v) break;
            out.push_back(*v);
        }
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;  // "section.key" -> value
};

inline const std::vector<std::string>& default_prompt_styles() {
    static const std::vector<std::string> styles = {
        "Please recommend me viewpoints near {name}",
        "What viewpoints are close to {name}?",
        "I am staying at {name}. What is worth seeing nearby?",
        "Any scenic spots around {name}?",
        "Recommend attractions near {name}, please.",
        "We will check in at {name} tomorrow; what can we visit close by?",
        "Looking for places to see within walking distance of {name}.",
        "Which tourist viewpoints should I visit near {name}?",
    };
    return styles;
}

/// Everything the pipeline, service and CLI read from one config file.
struct AppConfig {
    // data paths
    std::filesystem::path viewpoints_csv;
    std::filesystem::path hotels_csv;
    std::filesystem::path gazetteer_csv;

    // bridge
    std::size_t k = 5;
    double earth_radius_km = 6371.0;
    std::optional<std::string> remote_geocoder_url;  // optional fallback after the gazetteer

    dataset::RegionBounds bounds{-90.0, 90.0, -180.0, 180.0};
    std::vector<std::string> prompt_styles = default_prompt_styles();
    std::string extraction_instruction{llm::kExtractionInstruction};
    std::string generation_instruction{llm::kGenerationInstruction};

    eval::CompositeWeights weights;
    llm::BackendConfig extractor;
    llm::BackendConfig generator;
    llm::BackendConfig judge;

    unsigned seed = 42;
    double split = 0.8;
    int workers = 1;
    int histogram_bins = 10;

    std::string host = "127.0.0.1";
    int port = 8080;

    std::string config_hash = "0000000000000000";  // hash of the canonical key=value list

    static AppConfig load(const std::filesystem::path& path) {
        IniFile ini = IniFile::load(path);
        AppConfig cfg;
        const auto base = path.parent_path();
        auto resolve = [&](const std::string& value) -> std::filesystem::path {
            std::filesystem::path p = value;
            return p.is_absolute() || base.empty() ? p : base / p;
        };

        if (auto v = ini.get("paths.viewpoints")) cfg.viewpoints_csv = resolve(*v);
        if (auto v = ini.get("paths.hotels")) cfg.hotels_csv = resolve(*v);
        if (auto v = ini.get("paths.gazetteer")) cfg.gazetteer_csv = resolve(*v);

        cfg.k = static_cast<std::size_t>(ini.get_int("bridge.k", 5));
        cfg.earth_radius_km = ini.get_double("bridge.earth_radius_km", 6371.0);
        if (auto v = ini.get("bridge.remote_geocoder_url")) cfg.remote_geocoder_url = *v;

        cfg.bounds.lat_min = ini.get_double("bounds.lat_min", -90.0);
        cfg.bounds.lat_max = ini.get_double("bounds.lat_max", 90.0);
        cfg.bounds.lon_min = ini.get_double("bounds.lon_min", -180.0);
        cfg.bounds.lon_max = ini.get_double("bounds.lon_max", 180.0);

        if (auto styles = ini.styles("templates"); !styles.empty()) cfg.prompt_styles = styles;
        cfg.extraction_instruction =
            ini.get_or("instructions.extraction", cfg.extraction_instruction);
        cfg.generation_instruction =
            ini.get_or("instructions.generation", cfg.generation_instruction);

        cfg.weights.branch = eval::branch_from_string(ini.get_or("eval.branch", "unstructured"));
        for (int i = 0; i < 5; ++i)
            cfg.weights.c[static_cast<size_t>(i)] =
                ini.get_double("eval.c" + std::to_string(i + 1), cfg.weights.c[static_cast<size_t>(i)]);
        for (int i = 0; i < 3; ++i)
            cfg.weights.d[static_cast<size_t>(i)] =
                ini.get_double("eval.d" + std::to_string(i + 1), cfg.weights.d[static_cast<size_t>(i)]);
        cfg.weights.validate();

        cfg.extractor = load_backend(ini, "backend.extractor", resolve, 30000);
        cfg.generator = load_backend(ini, "backend.generator", resolve, 60000);
        cfg.judge = load_backend(ini, "backend.judge", resolve, 30000);

        cfg.seed = static_cast<unsigned>(ini.get_int("experiment.seed", 42));
        cfg.split = ini.get_double("experiment.split", 0.8);
        cfg.workers = ini.get_int("experiment.workers", 1);
        cfg.histogram_bins = ini.get_int("experiment.histogram_bins", 10);

        cfg.host = ini.get_or("service.host", cfg.host);
        cfg.port = ini.get_int("service.port", cfg.port);

        std::string canonical;
        for (const auto& [key, value] : ini.values())
            canonical += key + "=" + value + "\n";
        cfg.config_hash = strings::format_hex64(strings::fnv1a64(canonical));
        return cfg;
    }

    /// Locate the config file from --config or the DBA_CONFIG variable.
    static AppConfig from_cli(const std::optional<std::filesystem::path>& cli_path) {
        if (cli_path) return load(*cli_path);
        if (const char* env = std::getenv("DBA_CONFIG"); env && *env) return load(env);
        throw config_error("no config file: pass --config or set DBA_CONFIG");
    }

    /// The pipeline requires every referenced catalog to exist at startup.
    void validate_for_pipeline() const {
        auto must_exist = [](const std::filesystem::path& p, const char* field) {
            if (p.empty())
                throw config_error(std::string("missing required field: ") + field);
            if (!std::filesystem::exists(p))
                throw config_error(std::string(field) + " does not exist: " + p.string());
        };
        must_exist(viewpoints_csv, "paths.viewpoints");
        must_exist(gazetteer_csv, "paths.gazetteer");
        if (k < 1) throw config_error("bridge.k must be at least 1");
        if (earth_radius_km <= 0.0) throw config_error("bridge.earth_radius_km must be positive");
        bounds.validate();
        extractor.validate();
        generator.validate();
        judge.validate();
    }

private:
    template <typename Resolve>
    static llm::BackendConfig load_backend(const IniFile& ini, const std::string& section,
                                           Resolve&& resolve, int default_timeout_ms) {
        llm::BackendConfig cfg;
        cfg.kind = llm::backend_kind_from_string(ini.get_or(section + ".kind", "mock_echo"));
        cfg.endpoint = ini.get_or(section + ".endpoint", "");
        cfg.path = ini.get_or(section + ".path", cfg.path);
        cfg.model = ini.get_or(section + ".model", cfg.model);
        if (auto v = ini.get(section + ".fixture")) cfg.fixture_path = resolve(*v);
        cfg.timeout_ms = ini.get_int(section + ".timeout_ms", default_timeout_ms);
        cfg.max_retries = ini.get_int(section + ".max_retries", cfg.max_retries);
        cfg.max_in_flight = ini.get_int(section + ".max_in_flight", cfg.max_in_flight);
        cfg.backoff_base_ms = ini.get_int(section + ".backoff_base_ms", cfg.backoff_base_ms);
        cfg.api_key_env = ini.get_or(section + ".api_key_env", cfg.api_key_env);
        return cfg;
    }
};

}  // namespace dba::config
