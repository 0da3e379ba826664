// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dba/csv.hpp"
#include "dba/error.hpp"
#include "dba/geo.hpp"
#include "dba/strings.hpp"

namespace dba::dataset {

enum class Source { encyclopedia, travel_site, map_api, official };

constexpr std::string_view to_string(Source s) {
    switch (s) {
        case Source::encyclopedia: return "encyclopedia";
        case Source::travel_site: return "travel_site";
        case Source::map_api: return "map_api";
        default: return "official";
    }
}

/// A row as loaded, before cleaning. Coordinates and intro may be missing;
/// provenance tracks which side of a merge supplied each field.
struct RawRecord {
    Source source = Source::encyclopedia;
    std::string name;
    std::optional<double> lat;
    std::optional<double> lon;
    std::optional<std::string> intro;
    struct Provenance {
        std::string intro;   // "", "primary" or "secondary"
        std::string coords;
    } provenance;

    bool has_coords() const { return lat.has_value() && lon.has_value(); }
    bool has_intro() const { return intro && !strings::trim(*intro).empty(); }
};

struct RegionBounds {
    double lat_min, lat_max, lon_min, lon_max;

    void validate() const {
        if (!(lat_min < lat_max) || !(lon_min < lon_max))
            throw config_error("region bounds must satisfy min < max");
    }
    bool contains(double lat, double lon) const {
        return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
    }
};

struct HotelRecord {
    std::string name;
    geo::GeoPoint location;
};

/// Instruction-tuning example. `rejected` is set only for preference pairs,
/// where output serializes as [chosen, rejected].
struct FineTuneExample {
    std::string instruction;
    std::string input;
    std::string output;
    std::optional<std::string> rejected;
};

struct RowError {
    std::size_t row;  // 1-based file line (header is line 1)
    std::string reason;
};

enum class CsvSchema { viewpoint, hotel, coords };

struct LoadResult {
    std::vector<RawRecord> records;
    std::vector<RowError> errors;
};

namespace detail {

inline std::optional<double> parse_coord(const std::string& field, bool& bad) {
    auto t = strings::trim(field);
    if (t.empty()) return std::nullopt;
    try {
        size_t pos = 0;
        double v = std::stod(std::string(t), &pos);
        if (pos != t.size()) {
            bad = true;
            return std::nullopt;
        }
        return v;
    } catch (const std::exception&) {
        bad = true;
        return std::nullopt;
    }
}

}  // namespace detail

/// Load one CSV into raw records. Expected headers: `name,lat,lon,intro`
/// for viewpoints and `name,lat,lon` for hotels/coords. Malformed rows are
/// collected into the error report with their line numbers, never dropped
/// silently. Empty coordinate fields are allowed (missing value).
inline LoadResult load_csv(const std::filesystem::path& path, CsvSchema schema, Source source) {
    csv::Table table = csv::read_file(path);
    const std::vector<std::string> expected =
        schema == CsvSchema::viewpoint ? std::vector<std::string>{"name", "lat", "lon", "intro"}
                                       : std::vector<std::string>{"name", "lat", "lon"};
    if (table.header != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        throw data_error("header mismatch in " + path.string() + " (expected " + want + ")",
                         "header_mismatch");
    }

    LoadResult result;
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const size_t line = i + 2;
        const auto& row = table.rows[i];
        if (row.size() != expected.size()) {
            result.errors.push_back({line, "expected " + std::to_string(expected.size()) +
                                               " fields, got " + std::to_string(row.size())});
            continue;
        }
        RawRecord rec;
        rec.source = source;
        rec.name = std::string(strings::trim(row[0]));
        if (rec.name.empty()) {
            result.errors.push_back({line, "empty name"});
            continue;
        }
        bool bad_lat = false, bad_lon = false;
        rec.lat = detail::parse_coord(row[1], bad_lat);
        rec.lon = detail::parse_coord(row[2], bad_lon);
        if (bad_lat || bad_lon) {
            result.errors.push_back({line, std::string("non-numeric ") +
                                               (bad_lat ? "lat" : "lon")});
            continue;
        }
        if (schema == CsvSchema::viewpoint && !strings::trim(row[3]).empty())
            rec.intro = std::string(strings::trim(row[3]));
        if (rec.has_intro()) rec.provenance.intro = "primary";
        if (rec.has_coords()) rec.provenance.coords = "primary";
        result.records.push_back(std::move(rec));
    }
    return result;
}

/// Remove duplicates by normalized-name key; the first occurrence wins and
/// input order is preserved. Idempotent.
inline std::vector<RawRecord> dedupe(std::span<const RawRecord> records) {
    std::vector<RawRecord> out;
    std::unordered_set<std::string> seen;
    for (const auto& rec : records)
        if (seen.insert(strings::normalize_key(rec.name)).second) out.push_back(rec);
    return out;
}

/// Fill gaps in `primary` from name-matched `secondary` records; fields
/// already present in primary are never overwritten. Secondary-only records
/// are appended. Field provenance is updated on every fill.
inline std::vector<RawRecord> merge_fill(std::span<const RawRecord> primary,
                                         std::span<const RawRecord> secondary) {
    std::unordered_map<std::string, const RawRecord*> by_name;
    for (const auto& rec : secondary) by_name.try_emplace(strings::normalize_key(rec.name), &rec);

    std::vector<RawRecord> out;
    out.reserve(primary.size());
    std::unordered_set<std::string> primary_names;
    for (const auto& rec : primary) {
        RawRecord merged = rec;
        const std::string key = strings::normalize_key(rec.name);
        primary_names.insert(key);
        if (auto it = by_name.find(key); it != by_name.end()) {
            const RawRecord& sec = *it->second;
            if (!merged.has_intro() && sec.has_intro()) {
                merged.intro = sec.intro;
                merged.provenance.intro = "secondary";
            }
            if (!merged.has_coords() && sec.has_coords()) {
                merged.lat = sec.lat;
                merged.lon = sec.lon;
                merged.provenance.coords = "secondary";
            }
        }
        out.push_back(std::move(merged));
    }
    for (const auto& rec : secondary) {
        if (primary_names.count(strings::normalize_key(rec.name))) continue;
        RawRecord extra = rec;
        if (extra.has_intro()) extra.provenance.intro = "secondary";
        if (extra.has_coords()) extra.provenance.coords = "secondary";
        out.push_back(std::move(extra));
    }
    return out;
}

struct RejectedRecord {
    RawRecord record;
    std::string reason;  // "missing" or "out_of_range"
};

struct CoordPartition {
    std::vector<RawRecord> valid;
    std::vector<RejectedRecord> rejected;
};

/// Partition records by coordinate containment in the region bounds.
/// Exhaustive and disjoint: |valid| + |rejected| = |input|.
inline CoordPartition validate_coords(std::span<const RawRecord> records,
                                      const RegionBounds& bounds) {
    bounds.validate();
    CoordPartition part;
    for (const auto& rec : records) {
        if (!rec.has_coords())
            part.rejected.push_back({rec, "missing"});
        else if (!bounds.contains(*rec.lat, *rec.lon))
            part.rejected.push_back({rec, "out_of_range"});
        else
            part.valid.push_back(rec);
    }
    return part;
}

/// Stage counts for one ingest run. loaded >= deduped >= coord_valid and
/// coord_valid + coord_rejected = deduped hold on every run.
struct DatasetStats {
    std::size_t loaded = 0;
    std::size_t deduped = 0;
    std::size_t filled = 0;
    std::size_t coord_valid = 0;
    std::size_t coord_rejected = 0;
};

inline nlohmann::ordered_json stats_json(const DatasetStats& s) {
    return {{"loaded", s.loaded},
            {"deduped", s.deduped},
            {"filled", s.filled},
            {"coord_valid", s.coord_valid},
            {"coord_rejected", s.coord_rejected}};
}

// ---------------------------------------------------------------------------
// Fine-tuning dataset emitters
// ---------------------------------------------------------------------------

namespace detail {

/// Deterministic Fisher-Yates shuffle. std::shuffle is not pinned across
/// standard library implementations, so the reduction is spelled out.
template <typename T>
void seeded_shuffle(std::vector<T>& v, unsigned seed) {
    std::mt19937 rng(seed);
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

inline std::string instantiate_template(std::string_view tmpl, std::string_view name) {
    std::string out(tmpl);
    const std::string placeholder = "{name}";
    size_t pos = 0;
    while ((pos = out.find(placeholder, pos)) != std::string::npos) {
        out.replace(pos, placeholder.size(), name);
        pos += name.size();
    }
    return out;
}

}  // namespace detail

struct KeywordDataset {
    std::vector<FineTuneExample> train;
    std::vector<HotelRecord> test;
    unsigned seed = 0;
    double split = 0.0;
};

/// Build the keyword-extraction SFT set: seeded shuffle, then the first
/// floor(n * split) hotels become training examples and the rest the test
/// split. Prompt styles are cycled by index after the shuffle; `{name}` in
/// a style is replaced by the hotel name, and the output is the name itself.
inline KeywordDataset emit_sft_keyword_dataset(std::span<const HotelRecord> hotels,
                                               std::span<const std::string> prompt_styles,
                                               double split, unsigned seed,
                                               const std::string& instruction) {
    if (hotels.empty()) throw data_error("hotel list is empty", "bad_argument");
    if (!(split > 0.0 && split < 1.0))
        throw data_error("split must lie strictly between 0 and 1", "bad_argument");
    if (prompt_styles.empty()) throw data_error("need at least one prompt style", "bad_argument");

    std::vector<HotelRecord> shuffled(hotels.begin(), hotels.end());
    detail::seeded_shuffle(shuffled, seed);

    const size_t n_train = static_cast<size_t>(static_cast<double>(shuffled.size()) * split);
    KeywordDataset out;
    out.seed = seed;
    out.split = split;
    for (size_t i = 0; i < shuffled.size(); ++i) {
        if (i < n_train) {
            const std::string& style = prompt_styles[i % prompt_styles.size()];
            out.train.push_back({instruction,
                                 detail::instantiate_template(style, shuffled[i].name),
                                 shuffled[i].name, std::nullopt});
        } else {
            out.test.push_back(shuffled[i]);
        }
    }
    return out;
}

struct GenerationDataset {
    std::vector<FineTuneExample> examples;
    std::vector<std::string> skipped;  // names excluded for having no intro
};

/// One generation example per viewpoint: input is the name, output the
/// introduction. Viewpoints without an intro are excluded and reported.
inline GenerationDataset emit_sft_generation_dataset(std::span<const geo::ViewpointRecord> viewpoints,
                                                     const std::string& instruction) {
    GenerationDataset out;
    for (const auto& vp : viewpoints) {
        if (strings::trim(vp.intro).empty()) {
            out.skipped.push_back(vp.name);
            continue;
        }
        out.examples.push_back({instruction, vp.name, vp.intro, std::nullopt});
    }
    return out;
}

struct OrpoDataset {
    std::vector<FineTuneExample> examples;
    std::vector<std::string> degenerate;  // chosen == rejected, excluded
};

/// Preference pairs: output[0] is the reference intro (chosen), output[1]
/// the pre-fine-tuning model text (rejected). Every viewpoint must have a
/// baseline; pairs where baseline equals the intro are degenerate and are
/// excluded with a warning entry.
inline OrpoDataset emit_orpo_dataset(std::span<const geo::ViewpointRecord> viewpoints,
                                     const std::map<std::string, std::string>& baseline_outputs,
                                     const std::string& instruction) {
    std::vector<std::string> missing;
    for (const auto& vp : viewpoints)
        if (!baseline_outputs.count(vp.name)) missing.push_back(vp.name);
    if (!missing.empty()) {
        std::string names;
        for (const auto& n : missing) names += (names.empty() ? "" : ", ") + n;
        throw data_error("missing baseline outputs for: " + names, "missing_baseline");
    }

    OrpoDataset out;
    for (const auto& vp : viewpoints) {
        const std::string& baseline = baseline_outputs.at(vp.name);
        if (baseline == vp.intro) {
            out.degenerate.push_back(vp.name);
            continue;
        }
        out.examples.push_back({instruction, vp.name, vp.intro, baseline});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// JSON array of {instruction, input, output}; preference pairs serialize
/// output as a 2-element [chosen, rejected] array.
inline std::string finetune_json(std::span<const FineTuneExample> examples) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& ex : examples) {
        nlohmann::ordered_json obj;
        obj["instruction"] = ex.instruction;
        obj["input"] = ex.input;
        if (ex.rejected)
            obj["output"] = nlohmann::ordered_json::array({ex.output, *ex.rejected});
        else
            obj["output"] = ex.output;
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

inline std::vector<FineTuneExample> parse_finetune_json(const std::string& text) {
    auto doc = nlohmann::json::parse(text);
    std::vector<FineTuneExample> out;
    for (const auto& obj : doc) {
        FineTuneExample ex;
        ex.instruction = obj.at("instruction").get<std::string>();
        ex.input = obj.at("input").get<std::string>();
        const auto& output = obj.at("output");
        if (output.is_array()) {
            if (output.size() != 2)
                throw data_error("preference output must have exactly 2 elements", "parse");
            ex.output = output[0].get<std::string>();
            ex.rejected = output[1].get<std::string>();
        } else {
            ex.output = output.get<std::string>();
        }
        out.push_back(std::move(ex));
    }
    return out;
}

inline std::string rejection_csv(std::span<const RowError> errors) {
    std::string out = "row,reason\n";
    for (const auto& e : errors)
        out += std::to_string(e.row) + "," + csv::escape(e.reason) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Catalog conversion and ingest driver
// ---------------------------------------------------------------------------

/// Convert validated raw records to the viewpoint catalog. Records without
/// an intro are skipped and reported; duplicate names are impossible after
/// dedupe but rechecked here since catalog names must be unique.
inline std::vector<geo::ViewpointRecord> to_viewpoints(std::span<const RawRecord> records,
                                                       std::vector<std::string>* skipped = nullptr) {
    std::vector<geo::ViewpointRecord> out;
    std::unordered_set<std::string> names;
    for (const auto& rec : records) {
        if (!rec.has_intro()) {
            if (skipped) skipped->push_back(rec.name);
            continue;
        }
        if (!rec.has_coords()) {
            if (skipped) skipped->push_back(rec.name);
            continue;
        }
        if (!names.insert(strings::normalize_key(rec.name)).second)
            throw data_error("duplicate viewpoint name: " + rec.name, "duplicate_name");
        out.push_back({rec.name, geo::GeoPoint(*rec.lat, *rec.lon), std::nullopt, *rec.intro});
    }
    return out;
}

inline std::vector<HotelRecord> to_hotels(std::span<const RawRecord> records) {
    std::vector<HotelRecord> out;
    std::unordered_set<std::string> names;
    for (const auto& rec : records) {
        if (!rec.has_coords()) continue;
        if (!names.insert(strings::normalize_key(rec.name)).second)
            throw data_error("duplicate hotel name: " + rec.name, "duplicate_name");
        out.push_back({rec.name, geo::GeoPoint(*rec.lat, *rec.lon)});
    }
    return out;
}

struct IngestInputs {
    std::filesystem::path primary_viewpoints;                 // name,lat,lon,intro
    std::optional<std::filesystem::path> secondary_viewpoints;  // same schema
    std::optional<std::filesystem::path> coords;              // name,lat,lon
    std::optional<std::filesystem::path> hotels;              // name,lat,lon
};

struct IngestResult {
    std::vector<geo::ViewpointRecord> viewpoints;
    std::vector<HotelRecord> hotels;
    DatasetStats stats;
    std::vector<RowError> row_errors;
    std::vector<RejectedRecord> rejected;
    std::vector<std::string> incomplete;  // names dropped for missing intro/coords
};

/// Multi-source ingest: load, dedupe, fill gaps across sources, validate
/// coordinates against the region bounds, and produce the final catalogs.
inline IngestResult run_ingest(const IngestInputs& inputs, const RegionBounds& bounds) {
    IngestResult out;

    auto primary = load_csv(inputs.primary_viewpoints, CsvSchema::viewpoint, Source::encyclopedia);
    out.row_errors = primary.errors;
    out.stats.loaded = primary.records.size();

    std::vector<RawRecord> merged = dedupe(primary.records);
    if (inputs.secondary_viewpoints) {
        auto secondary =
            load_csv(*inputs.secondary_viewpoints, CsvSchema::viewpoint, Source::travel_site);
        for (auto& e : secondary.errors) out.row_errors.push_back(e);
        out.stats.loaded += secondary.records.size();
        merged = merge_fill(merged, dedupe(secondary.records));
    }
    if (inputs.coords) {
        auto coords = load_csv(*inputs.coords, CsvSchema::coords, Source::map_api);
        for (auto& e : coords.errors) out.row_errors.push_back(e);
        out.stats.loaded += coords.records.size();
        merged = merge_fill(merged, dedupe(coords.records));
    }
    out.stats.deduped = merged.size();
    for (const auto& rec : merged)
        if (rec.provenance.intro == "secondary" || rec.provenance.coords == "secondary")
            ++out.stats.filled;

    auto partition = validate_coords(merged, bounds);
    out.stats.coord_valid = partition.valid.size();
    out.stats.coord_rejected = partition.rejected.size();
    out.rejected = std::move(partition.rejected);
    out.viewpoints = to_viewpoints(partition.valid, &out.incomplete);

    if (inputs.hotels) {
        auto hotels = load_csv(*inputs.hotels, CsvSchema::hotel, Source::travel_site);
        for (auto& e : hotels.errors) out.row_errors.push_back(e);
        auto deduped = dedupe(hotels.records);
        auto hotel_partition = validate_coords(deduped, bounds);
        out.hotels = to_hotels(hotel_partition.valid);
        for (auto& r : hotel_partition.rejected) out.rejected.push_back(std::move(r));
    }
    return out;
}

inline std::string viewpoints_csv(std::span<const geo::ViewpointRecord> viewpoints) {
    std::string out = "name,lat,lon,intro\n";
    char buf[64];
    for (const auto& vp : viewpoints) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f", vp.location.lat(), vp.location.lon());
        out += csv::escape(vp.name) + "," + buf + "," + csv::escape(vp.intro) + "\n";
    }
    return out;
}

inline std::string hotels_csv(std::span<const HotelRecord> hotels) {
    std::string out = "name,lat,lon\n";
    char buf[64];
    for (const auto& h : hotels) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f", h.location.lat(), h.location.lon());
        out += csv::escape(h.name) + "," + buf + "\n";
    }
    return out;
}

}  // namespace dba::dataset
