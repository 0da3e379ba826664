// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dba/bridge.hpp"
#include "dba/config.hpp"
#include "dba/dataset.hpp"
#include "dba/error.hpp"
#include "dba/eval.hpp"
#include "dba/geo.hpp"
#include "dba/geocode.hpp"
#include "dba/jsonio.hpp"
#include "dba/llm.hpp"
#include "dba/metrics.hpp"

namespace dba::pipeline {

struct StageTiming {
    double extract_ms = 0.0;
    double bridge_ms = 0.0;
    double generate_ms = 0.0;
};

struct QueryResult {
    std::string name;
    double distance_km = 0.0;
    geo::GeoPoint location{0.0, 0.0};
    std::string intro;
};

/// End-to-end answer for one user prompt. Timings are kept out of the
/// canonical JSON so repeated runs produce identical bytes; pass
/// include_timing to get them.
struct PipelineResponse {
    std::string user_prompt;
    std::string extracted_keyword;
    geo::GeoPoint resolved{0.0, 0.0};
    std::vector<QueryResult> results;
    StageTiming timing;

    std::string to_json(bool include_timing = false) const {
        std::string out = "{\"user_prompt\":" + jsonio::quote(user_prompt) +
                          ",\"extracted_keyword\":" + jsonio::quote(extracted_keyword) +
                          ",\"resolved\":{\"lat\":" + jsonio::degrees(resolved.lat()) +
                          ",\"lon\":" + jsonio::degrees(resolved.lon()) + "},\"results\":[";
        for (size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            if (i) out.push_back(',');
            out += "{\"name\":" + jsonio::quote(r.name) +
                   ",\"distance_km\":" + jsonio::kilometers(r.distance_km) +
                   ",\"lat\":" + jsonio::degrees(r.location.lat()) +
                   ",\"lon\":" + jsonio::degrees(r.location.lon()) +
                   ",\"intro\":" + jsonio::quote(r.intro) + "}";
        }
        out += "]";
        if (include_timing) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          ",\"timing_ms\":{\"extract\":%.3f,\"bridge\":%.3f,\"generate\":%.3f}",
                          timing.extract_ms, timing.bridge_ms, timing.generate_ms);
            out += buf;
        }
        out += "}";
        return out;
    }
};

/// Error JSON shared by the CLI and the HTTP service.
inline std::string error_json(const Error& e) {
    std::string out = "{\"error\":" + jsonio::quote(e.code()) +
                      ",\"kind\":" + jsonio::quote(to_string(e.kind()));
    if (e.stage() != Stage::none) out += ",\"stage\":" + jsonio::quote(to_string(e.stage()));
    out += ",\"message\":" + jsonio::quote(e.what()) + "}";
    return out;
}

/// Loaded catalogs plus backends; immutable after construction and safe to
/// share across request handlers.
class Pipeline {
public:
    explicit Pipeline(config::AppConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate_for_pipeline();

        auto loaded =
            dataset::load_csv(cfg_.viewpoints_csv, dataset::CsvSchema::viewpoint,
                              dataset::Source::encyclopedia);
        if (!loaded.errors.empty())
            throw data_error("viewpoint catalog has " + std::to_string(loaded.errors.size()) +
                                 " malformed rows (first at line " +
                                 std::to_string(loaded.errors.front().row) + ")",
                             "parse");
        viewpoints_ = dataset::to_viewpoints(dataset::dedupe(loaded.records));
        if (viewpoints_.empty())
            throw data_error("viewpoint catalog is empty after validation", "empty_catalog");

        std::vector<std::shared_ptr<geo::Geocoder>> chain;
        chain.push_back(std::make_shared<geo::Gazetteer>(geo::Gazetteer::from_csv(cfg_.gazetteer_csv)));
        if (cfg_.remote_geocoder_url)
            chain.push_back(std::make_shared<geo::HttpGeocoder>(
                geo::HttpGeocoderOptions{.base_url = *cfg_.remote_geocoder_url}));
        geocoder_ = std::make_shared<geo::CachingGeocoder>(
            std::make_shared<geo::ChainGeocoder>(std::move(chain)));

        extractor_ = llm::make_backend(cfg_.extractor);
        generator_ = llm::make_backend(cfg_.generator);
        judge_ = llm::make_backend(cfg_.judge);
        earth_ = geo::EarthModel{cfg_.earth_radius_km};
    }

    const config::AppConfig& config() const { return cfg_; }
    std::span<const geo::ViewpointRecord> viewpoints() const { return viewpoints_; }
    geo::Geocoder& geocoder() const { return *geocoder_; }
    llm::ChatBackend& extractor() const { return *extractor_; }
    llm::ChatBackend& generator() const { return *generator_; }
    llm::ChatBackend& judge() const { return *judge_; }
    const geo::EarthModel& earth() const { return earth_; }

    /// The three-stage flow: extract the location keyword, resolve it and
    /// rank viewpoints by distance, then generate one introduction per
    /// result. Failures carry the stage that produced them.
    PipelineResponse run_query(const std::string& prompt,
                               std::optional<std::size_t> k_override = {}) const {
        PipelineResponse response;
        response.user_prompt = prompt;
        const std::size_t k = k_override.value_or(cfg_.k);
        if (k < 1) throw Error(ErrorKind::data, "bad_argument", "k must be at least 1");

        response.extracted_keyword = timed(response.timing.extract_ms, Stage::extract, [&] {
            return llm::extract_location_keyword(prompt, *extractor_, cfg_.extraction_instruction);
        });

        std::vector<geo::NearestResult> nearest =
            timed(response.timing.bridge_ms, Stage::bridge, [&] {
                response.resolved = geocoder_->geocode(response.extracted_keyword);
                return geo::nearest_viewpoints(response.resolved, viewpoints_, k, earth_);
            });

        timed(response.timing.generate_ms, Stage::generate, [&] {
            for (const auto& n : nearest) {
                std::string intro = llm::generate_viewpoint_intro(n.name, *generator_,
                                                                  cfg_.generation_instruction);
                response.results.push_back({n.name, n.distance_km, n.location, std::move(intro)});
            }
            return 0;
        });
        return response;
    }

    /// Judge-backed scorers for unstructured evaluation.
    eval::BatchScorers scorers(const metrics::Embedder& embedder) const {
        eval::BatchScorers s;
        s.fluency = [this](const std::string& candidate) {
            return llm::judge_score(candidate, std::nullopt, llm::JudgeRubric::fluency, *judge_);
        };
        s.relevance = [this](const std::string& candidate, const std::string& reference) {
            return llm::judge_score(candidate, reference, llm::JudgeRubric::relevance, *judge_);
        };
        s.embedder = &embedder;
        return s;
    }

private:
    template <typename Fn>
    auto timed(double& slot_ms, Stage stage, Fn&& fn) const {
        auto start = std::chrono::steady_clock::now();
        try {
            auto result = fn();
            slot_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                start)
                          .count();
            return result;
        } catch (const Error& e) {
            throw e.with_stage(stage);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::data, "internal", e.what(), stage);
        }
    }

    config::AppConfig cfg_;
    std::vector<geo::ViewpointRecord> viewpoints_;
    std::shared_ptr<geo::CachingGeocoder> geocoder_;
    std::unique_ptr<llm::ChatBackend> extractor_;
    std::unique_ptr<llm::ChatBackend> generator_;
    std::unique_ptr<llm::ChatBackend> judge_;
    geo::EarthModel earth_;
};

// ---------------------------------------------------------------------------
// Batch experiments
// ---------------------------------------------------------------------------

enum class ExperimentMode { extraction, generation };

inline ExperimentMode experiment_mode_from_string(std::string_view s) {
    if (s == "extraction") return ExperimentMode::extraction;
    if (s == "generation") return ExperimentMode::generation;
    throw config_error("unknown experiment mode: " + std::string(s));
}

struct ExperimentItem {
    std::string input;       // prompt (extraction) or viewpoint name (generation)
    std::string expected;    // keyword label or reference intro
    std::string produced;    // model output, empty on failure
    std::optional<std::string> error;
};

struct ExperimentRun {
    std::string run_id;
    std::string config_hash;
    ExperimentMode mode;
    std::vector<ExperimentItem> items;
    std::size_t scored = 0;
    std::size_t failed = 0;
    double accuracy = 0.0;           // extraction mode: exact-match fraction
    eval::ScoreReport report;        // generation mode: unstructured batch report
    std::string backend_id;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["run_id"] = run_id;
        j["config_hash"] = config_hash;
        j["mode"] = mode == ExperimentMode::extraction ? "extraction" : "generation";
        j["backend_id"] = backend_id;
        j["scored"] = scored;
        j["failed"] = failed;
        if (mode == ExperimentMode::extraction)
            j["accuracy"] = accuracy;
        else
            j["report"] = eval::report_json(report);
        auto arr = nlohmann::ordered_json::array();
        for (const auto& item : items) {
            nlohmann::ordered_json ij;
            ij["input"] = item.input;
            ij["expected"] = item.expected;
            ij["produced"] = item.produced;
            if (item.error) ij["error"] = *item.error;
            arr.push_back(std::move(ij));
        }
        j["items"] = std::move(arr);
        return j;
    }
};

struct TestPair {
    std::string input;
    std::string expected;
};

/// Run one Table-style experiment over a labeled test set. Per-item
/// failures are recorded and never abort the run; failed extractions count
/// as mismatches in the accuracy.
inline ExperimentRun run_experiment(const Pipeline& pipe, std::span<const TestPair> test_set,
                                    ExperimentMode mode, const metrics::Embedder& embedder,
                                    int workers = 1) {
    if (test_set.empty()) throw data_error("empty test set", "bad_argument");

    ExperimentRun run;
    run.mode = mode;
    run.config_hash = pipe.config().config_hash;
    run.items.resize(test_set.size());
    run.backend_id =
        mode == ExperimentMode::extraction ? pipe.extractor().id() : pipe.generator().id();
    {
        std::string key = std::string(mode == ExperimentMode::extraction ? "extraction"
                                                                         : "generation") +
                          "\x1f" + run.config_hash + "\x1f" + std::to_string(test_set.size());
        run.run_id = strings::format_hex64(strings::fnv1a64(key));
    }

    auto run_item = [&](std::size_t i) {
        ExperimentItem item;
        item.input = test_set[i].input;
        item.expected = test_set[i].expected;
        try {
            if (mode == ExperimentMode::extraction)
                item.produced = llm::extract_location_keyword(
                    item.input, pipe.extractor(), pipe.config().extraction_instruction);
            else
                item.produced = llm::generate_viewpoint_intro(
                    item.input, pipe.generator(), pipe.config().generation_instruction);
        } catch (const std::exception& e) {
            item.error = e.what();
        }
        run.items[i] = std::move(item);
    };

    const int n_workers = std::max(1, workers);
    if (n_workers == 1) {
        for (std::size_t i = 0; i < run.items.size(); ++i) run_item(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < n_workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < run.items.size();
                     i = next.fetch_add(1))
                    run_item(i);
            });
        for (auto& th : pool) th.join();
    }

    for (const auto& item : run.items)
        item.error ? ++run.failed : ++run.scored;

    if (mode == ExperimentMode::extraction) {
        std::vector<std::string> predictions, labels;
        for (const auto& item : run.items) {
            predictions.push_back(item.produced);
            labels.push_back(item.expected);
        }
        run.accuracy = metrics::exact_match_accuracy(predictions, labels);
    } else {
        std::vector<eval::EvalItem> batch;
        for (const auto& item : run.items)
            batch.push_back({item.produced, item.expected});
        eval::CompositeWeights weights = pipe.config().weights;
        run.report = eval::evaluate_batch(batch, eval::Branch::unstructured, weights,
                                          pipe.scorers(embedder), workers,
                                          pipe.config().histogram_bins);
    }
    return run;
}

}  // namespace dba::pipeline
