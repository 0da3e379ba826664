// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dba/error.hpp"

namespace dba::geo {

/// Latitude/longitude pair in decimal degrees. Latitude must lie in
/// [-90, 90]; longitude is normalized into (-180, 180] on construction.
class GeoPoint {
public:
    GeoPoint(double lat, double lon) : lat_(lat), lon_(normalize_lon(lon)) {
        if (!(lat >= -90.0 && lat <= 90.0))
            throw data_error("lat must be within [-90, 90], got " + std::to_string(lat),
                             "bad_argument");
    }

    double lat() const noexcept { return lat_; }
    double lon() const noexcept { return lon_; }

    static double normalize_lon(double lon) {
        if (!std::isfinite(lon))
            throw data_error("lon must be finite", "bad_argument");
        double x = std::fmod(lon, 360.0);
        if (x <= -180.0) x += 360.0;
        if (x > 180.0) x -= 360.0;
        if (x == -180.0) x = 180.0;
        return x;
    }

private:
    double lat_;
    double lon_;
};

/// Sphere used for geodesic math. 6371.0 km is the conventional mean radius.
struct EarthModel {
    double radius_km = 6371.0;
};

inline constexpr double kDegToRad = std::numbers::pi / 180.0;

/// Great-circle distance in kilometers via the haversine formula:
///   a = sin^2(dphi/2) + cos(phi1) cos(phi2) sin^2(dlambda/2)
///   c = 2 atan2(sqrt(a), sqrt(1 - a)),  d = R c
/// `a` is clamped into [0, 1]; rounding near antipodes can push it outside.
inline double haversine_distance(const GeoPoint& p1, const GeoPoint& p2,
                                 const EarthModel& earth = {}) {
    if (earth.radius_km <= 0.0)
        throw data_error("earth radius must be positive", "bad_argument");
    const double phi1 = p1.lat() * kDegToRad;
    const double phi2 = p2.lat() * kDegToRad;
    const double dphi = (p2.lat() - p1.lat()) * kDegToRad;
    const double dlambda = (p2.lon() - p1.lon()) * kDegToRad;
    if (dphi == 0.0 && dlambda == 0.0) return 0.0;
    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlambda / 2.0);
    double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    a = std::clamp(a, 0.0, 1.0);
    const double c = 2.0 * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
    return earth.radius_km * c;
}

/// Named point of interest with an introduction text.
struct ViewpointRecord {
    std::string name;
    GeoPoint location;
    std::optional<std::string> region;
    std::string intro;
};

struct NearestResult {
    std::string name;
    double distance_km;
    GeoPoint location;
};

/// k nearest viewpoints by haversine distance, sorted ascending; equal
/// distances order lexicographically by name. Returns min(k, set size)
/// results. The empty catalog is an error, k must be at least 1.
inline std::vector<NearestResult> nearest_viewpoints(const GeoPoint& query,
                                                     std::span<const ViewpointRecord> viewpoints,
                                                     std::size_t k,
                                                     const EarthModel& earth = {}) {
    if (viewpoints.empty()) throw data_error("viewpoint catalog is empty", "empty_catalog");
    if (k == 0) throw data_error("k must be at least 1", "bad_argument");

    std::vector<NearestResult> all;
    all.reserve(viewpoints.size());
    for (const auto& vp : viewpoints)
        all.push_back({vp.name, haversine_distance(query, vp.location, earth), vp.location});

    const std::size_t take = std::min(k, all.size());
    auto by_distance_then_name = [](const NearestResult& a, const NearestResult& b) {
        if (a.distance_km != b.distance_km) return a.distance_km < b.distance_km;
        return a.name < b.name;
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                      by_distance_then_name);
    all.resize(take);
    return all;
}

}  // namespace dba::geo
