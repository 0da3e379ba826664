// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <span>
#include <string>
#include <string_view>

#include "dba/geo.hpp"
#include "dba/geocode.hpp"
#include "dba/jsonio.hpp"

namespace dba::geo {

struct BridgeLookup {
    bool found;
    std::string json;
};

/// Serialize one lookup with a fixed key order and fixed number formatting
/// (6 decimals for degrees, 3 for kilometers) so output is byte-stable.
inline std::string bridge_json(std::string_view keyword, const GeoPoint& resolved,
                               std::span<const NearestResult> results) {
    std::string out = "{\"query_keyword\":" + jsonio::quote(keyword) +
                      ",\"resolved\":{\"lat\":" + jsonio::degrees(resolved.lat()) +
                      ",\"lon\":" + jsonio::degrees(resolved.lon()) + "},\"results\":[";
    for (size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (i) out.push_back(',');
        out += "{\"name\":" + jsonio::quote(r.name) +
               ",\"distance_km\":" + jsonio::kilometers(r.distance_km) +
               ",\"lat\":" + jsonio::degrees(r.location.lat()) +
               ",\"lon\":" + jsonio::degrees(r.location.lon()) + "}";
    }
    out += "]}";
    return out;
}

/// Resolve a keyword and return the k nearest viewpoints as JSON.
/// An unknown keyword yields {"error":"not_found",...}; transport failures
/// propagate as exceptions so callers can tell the two apart.
inline BridgeLookup bridge_lookup(std::string_view keyword, Geocoder& geocoder,
                                  std::span<const ViewpointRecord> viewpoints, std::size_t k,
                                  const EarthModel& earth = {}) {
    GeoPoint resolved(0.0, 0.0);
    try {
        resolved = geocoder.geocode(keyword);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::data && e.code() == "not_found")
            return {false, "{\"error\":\"not_found\",\"keyword\":" + jsonio::quote(keyword) + "}"};
        throw;
    }
    auto results = nearest_viewpoints(resolved, viewpoints, k, earth);
    return {true, bridge_json(keyword, resolved, results)};
}

}  // namespace dba::geo
