// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "dba/csv.hpp"
#include "dba/error.hpp"
#include "dba/geo.hpp"
#include "dba/strings.hpp"

namespace dba::geo {

/// Resolves a location keyword to coordinates. Implementations throw
/// Error("not_found") for unknown keywords and Error(transport) when a
/// remote backend cannot be reached; the two are never conflated.
class Geocoder {
public:
    virtual ~Geocoder() = default;

    GeoPoint geocode(std::string_view keyword) {
        std::string k(strings::trim(keyword));
        if (k.empty()) throw data_error("keyword must be non-empty", "bad_argument");
        return resolve(k);
    }

protected:
    virtual GeoPoint resolve(const std::string& keyword) = 0;
};

/// Offline name -> coordinates table backed by a `name,lat,lon` CSV.
/// Lookups use the normalized-name key.
class Gazetteer : public Geocoder {
public:
    explicit Gazetteer(std::vector<std::pair<std::string, GeoPoint>> entries) {
        for (auto& [name, point] : entries) entries_.emplace(strings::normalize_key(name), point);
    }

    static Gazetteer from_csv(const std::filesystem::path& path) {
        csv::Table table = csv::read_file(path);
        if (table.header != std::vector<std::string>{"name", "lat", "lon"})
            throw data_error("gazetteer header must be name,lat,lon: " + path.string(),
                             "header_mismatch");
        std::vector<std::pair<std::string, GeoPoint>> entries;
        for (size_t i = 0; i < table.rows.size(); ++i) {
            const auto& row = table.rows[i];
            if (row.size() != 3)
                throw data_error("gazetteer row " + std::to_string(i + 2) + " has " +
                                     std::to_string(row.size()) + " fields",
                                 "parse");
            try {
                entries.emplace_back(row[0], GeoPoint(std::stod(row[1]), std::stod(row[2])));
            } catch (const Error&) {
                throw;
            } catch (const std::exception&) {
                throw data_error("gazetteer row " + std::to_string(i + 2) +
                                     " has non-numeric coordinates",
                                 "parse");
            }
        }
        return Gazetteer(std::move(entries));
    }

    size_t size() const noexcept { return entries_.size(); }

protected:
    GeoPoint resolve(const std::string& keyword) override {
        auto it = entries_.find(strings::normalize_key(keyword));
        if (it == entries_.end())
            throw data_error("keyword not found in gazetteer: " + keyword, "not_found");
        return it->second;
    }

private:
    std::unordered_map<std::string, GeoPoint> entries_;
};

/// Adapter from an HTTP response to a point. Returning nullopt means the
/// keyword was not found; throwing propagates as-is.
using GeocodeResponseAdapter =
    std::function<std::optional<GeoPoint>(int status, const std::string& body)>;

struct HttpGeocoderOptions {
    std::string base_url;              // e.g. "http://127.0.0.1:8900"
    std::string path = "/geocode";     // GET path
    std::string query_param = "q";     // keyword parameter name
    std::string api_key_env = "GEOCODER_API_KEY";
    std::string api_key_param = "key";
    int timeout_ms = 5000;
};

/// Remote geocoding backend. The default adapter reads {"lat": .., "lon": ..}
/// from a 200 response and treats 404 as not-found; alternative providers
/// plug in their own adapter.
class HttpGeocoder : public Geocoder {
public:
    explicit HttpGeocoder(HttpGeocoderOptions options, GeocodeResponseAdapter adapter = {})
        : options_(std::move(options)), adapter_(std::move(adapter)) {
        if (options_.base_url.empty())
            throw config_error("http geocoder requires a base_url", "config");
        if (!adapter_) adapter_ = default_adapter;
    }

    static std::optional<GeoPoint> default_adapter(int status, const std::string& body) {
        if (status == 404) return std::nullopt;
        if (status != 200)
            throw transport_error("geocoder returned status " + std::to_string(status));
        auto doc = nlohmann::json::parse(body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("lat") || !doc.contains("lon"))
            return std::nullopt;
        return GeoPoint(doc["lat"].get<double>(), doc["lon"].get<double>());
    }

protected:
    GeoPoint resolve(const std::string& keyword) override {
        httplib::Client client(options_.base_url);
        client.set_connection_timeout(0, options_.timeout_ms * 1000);
        client.set_read_timeout(0, options_.timeout_ms * 1000);
        httplib::Params params{{options_.query_param, keyword}};
        if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key)
            params.emplace(options_.api_key_param, key);
        auto res = client.Get(options_.path, params, httplib::Headers{});
        if (!res)
            throw transport_error("geocoder unreachable: " + options_.base_url + " (" +
                                  httplib::to_string(res.error()) + ")");
        auto point = adapter_(res->status, res->body);
        if (!point) throw data_error("keyword not resolvable: " + keyword, "not_found");
        return *point;
    }

private:
    HttpGeocoderOptions options_;
    GeocodeResponseAdapter adapter_;
};

/// Tries each backend in order; not-found falls through to the next,
/// transport errors propagate immediately.
class ChainGeocoder : public Geocoder {
public:
    explicit ChainGeocoder(std::vector<std::shared_ptr<Geocoder>> chain)
        : chain_(std::move(chain)) {
        if (chain_.empty()) throw config_error("geocoder chain must not be empty");
    }

protected:
    GeoPoint resolve(const std::string& keyword) override {
        for (size_t i = 0; i < chain_.size(); ++i) {
            try {
                return chain_[i]->geocode(keyword);
            } catch (const Error& e) {
                bool last = i + 1 == chain_.size();
                if (e.code() != "not_found" || last) throw;
            }
        }
        throw data_error("keyword not resolvable: " + keyword, "not_found");
    }

private:
    std::vector<std::shared_ptr<Geocoder>> chain_;
};

/// Memoizes successful lookups. Concurrent reads share the lock; writes
/// are exclusive.
class CachingGeocoder : public Geocoder {
public:
    explicit CachingGeocoder(std::shared_ptr<Geocoder> inner) : inner_(std::move(inner)) {
        if (!inner_) throw config_error("caching geocoder requires an inner backend");
    }

    size_t cache_size() const {
        std::shared_lock lock(mutex_);
        return cache_.size();
    }

protected:
    GeoPoint resolve(const std::string& keyword) override {
        const std::string key = strings::normalize_key(keyword);
        {
            std::shared_lock lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        GeoPoint point = inner_->geocode(keyword);
        {
            std::unique_lock lock(mutex_);
            cache_.emplace(key, point);
        }
        return point;
    }

private:
    std::shared_ptr<Geocoder> inner_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, GeoPoint> cache_;
};

}  // namespace dba::geo
