// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dba/bridge.hpp"
#include "dba/config.hpp"
#include "dba/dataset.hpp"
#include "dba/error.hpp"
#include "dba/eval.hpp"
#include "dba/llm.hpp"
#include "dba/metrics.hpp"
#include "dba/pipeline.hpp"
#include "dba/service.hpp"

namespace {

namespace fs = std::filesystem;
using dba::Error;

void write_file(const fs::path& path, const std::string& content) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dba::data_error("cannot write " + path.string(), "write_failed");
    out << content;
}

std::vector<double> read_scores(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw dba::data_error("cannot open " + path.string(), "missing_file");
    std::vector<double> scores;
    std::string line;
    while (std::getline(in, line)) {
        auto t = dba::strings::trim(line);
        if (t.empty() || t == "score") continue;
        try {
            scores.push_back(std::stod(std::string(t)));
        } catch (const std::exception&) {
            throw dba::data_error("non-numeric score line: " + std::string(t), "parse");
        }
    }
    return scores;
}

std::vector<dba::pipeline::TestPair> read_test_pairs(const fs::path& path,
                                                     dba::pipeline::ExperimentMode mode) {
    auto table = dba::csv::read_file(path);
    using Mode = dba::pipeline::ExperimentMode;
    const std::vector<std::string> expected =
        mode == Mode::extraction ? std::vector<std::string>{"prompt", "expected"}
                                 : std::vector<std::string>{"name", "reference"};
    if (table.header != expected)
        throw dba::data_error("test set header must be " + expected[0] + "," + expected[1],
                              "header_mismatch");
    std::vector<dba::pipeline::TestPair> pairs;
    for (const auto& row : table.rows) {
        if (row.size() != 2) throw dba::data_error("test set rows need 2 fields", "parse");
        pairs.push_back({row[0], row[1]});
    }
    return pairs;
}

std::map<std::string, std::string> read_baselines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw dba::data_error("cannot open " + path.string(), "missing_file");
    nlohmann::json doc;
    in >> doc;
    if (!doc.is_object())
        throw dba::data_error("baselines file must be a JSON object", "parse");
    std::map<std::string, std::string> out;
    for (auto& [key, value] : doc.items()) out[key] = value.get<std::string>();
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DualGen Bridge viewpoint information pipeline"};
    app.require_subcommand(1);

    std::optional<fs::path> config_path;
    app.add_option("--config", config_path, "Config file (or set DBA_CONFIG)");

    // --- ingest ---
    auto* ingest = app.add_subcommand("ingest", "Clean and merge multi-source POI data");
    fs::path in_primary, in_out_dir = ".";
    std::optional<fs::path> in_secondary, in_coords, in_hotels;
    ingest->add_option("--viewpoints", in_primary, "Primary viewpoint CSV (name,lat,lon,intro)")
        ->required();
    ingest->add_option("--secondary", in_secondary, "Secondary viewpoint CSV to fill gaps from");
    ingest->add_option("--coords", in_coords, "Coordinate CSV (name,lat,lon)");
    ingest->add_option("--hotels", in_hotels, "Hotel CSV (name,lat,lon)");
    ingest->add_option("--out-dir", in_out_dir, "Output directory");

    // --- emit-finetune ---
    auto* emit = app.add_subcommand("emit-finetune", "Write fine-tuning datasets");
    std::string emit_mode;
    fs::path emit_out, emit_in;
    std::optional<fs::path> emit_baselines;
    std::optional<unsigned> emit_seed;
    std::optional<double> emit_split;
    emit->add_option("--mode", emit_mode, "sft-keyword | sft-gen | orpo")
        ->required()
        ->check(CLI::IsMember({"sft-keyword", "sft-gen", "orpo"}));
    emit->add_option("--input", emit_in, "Hotels CSV (sft-keyword) or viewpoints CSV")->required();
    emit->add_option("--out", emit_out, "Output JSON file")->required();
    emit->add_option("--baselines", emit_baselines, "JSON map name -> pre-fine-tuning output");
    emit->add_option("--seed", emit_seed, "Shuffle seed (default from config)");
    emit->add_option("--split", emit_split, "Train fraction (default from config)");

    // --- geocode ---
    auto* geocode_cmd = app.add_subcommand("geocode", "Resolve a keyword to coordinates");
    std::string geocode_keyword;
    geocode_cmd->add_option("keyword", geocode_keyword, "Location keyword")->required();

    // --- nearest ---
    auto* nearest_cmd = app.add_subcommand("nearest", "k nearest viewpoints to a point");
    double near_lat = 0.0, near_lon = 0.0;
    std::optional<std::size_t> near_k;
    nearest_cmd->add_option("--lat", near_lat, "Latitude")->required();
    nearest_cmd->add_option("--lon", near_lon, "Longitude")->required();
    nearest_cmd->add_option("-k,--k", near_k, "Result count (default from config)");

    // --- query ---
    auto* query_cmd = app.add_subcommand("query", "Run the full three-stage pipeline");
    std::string query_prompt;
    std::optional<std::size_t> query_k;
    bool query_timing = false;
    query_cmd->add_option("--prompt", query_prompt, "User prompt")->required();
    query_cmd->add_option("-k,--k", query_k, "Result count (default from config)");
    query_cmd->add_flag("--timing", query_timing, "Include per-stage timings in the JSON");

    // --- experiment ---
    auto* exp_cmd = app.add_subcommand("experiment", "Batch experiment over a test set");
    std::string exp_mode;
    fs::path exp_test_set;
    std::optional<fs::path> exp_out;
    exp_cmd->add_option("--mode", exp_mode, "extraction | generation")
        ->required()
        ->check(CLI::IsMember({"extraction", "generation"}));
    exp_cmd->add_option("--test-set", exp_test_set, "CSV test set")->required();
    exp_cmd->add_option("--out", exp_out, "Write the run report to this file");

    // --- score ---
    auto* score_cmd = app.add_subcommand("score", "Score a candidate against a reference");
    std::string score_candidate, score_reference, score_mode = "structured";
    score_cmd->add_option("--candidate", score_candidate, "Candidate text")->required();
    score_cmd->add_option("--reference", score_reference, "Reference text")->required();
    score_cmd->add_option("--mode", score_mode, "structured | unstructured")
        ->check(CLI::IsMember({"structured", "unstructured"}));

    // --- report-distribution ---
    auto* dist_cmd = app.add_subcommand("report-distribution",
                                        "Compare system and human score distributions");
    fs::path dist_system, dist_human;
    int dist_bins = 10;
    dist_cmd->add_option("--system", dist_system, "System scores, one number per line")
        ->required();
    dist_cmd->add_option("--human", dist_human, "Human scores, one number per line")->required();
    dist_cmd->add_option("--bins", dist_bins, "Histogram bin count");

    // --- serve ---
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    std::optional<std::string> serve_host;
    std::optional<int> serve_port;
    serve_cmd->add_option("--host", serve_host, "Bind host (default from config)");
    serve_cmd->add_option("--port", serve_port, "Bind port (default from config)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            auto cfg = dba::config::AppConfig::from_cli(config_path);
            dba::dataset::IngestInputs inputs{in_primary, in_secondary, in_coords, in_hotels};
            auto result = dba::dataset::run_ingest(inputs, cfg.bounds);
            write_file(in_out_dir / "viewpoints.csv",
                       dba::dataset::viewpoints_csv(result.viewpoints));
            if (!result.hotels.empty())
                write_file(in_out_dir / "hotels.csv", dba::dataset::hotels_csv(result.hotels));
            std::vector<dba::dataset::RowError> rejects = result.row_errors;
            write_file(in_out_dir / "rejections.csv", dba::dataset::rejection_csv(rejects));
            nlohmann::ordered_json stats = dba::dataset::stats_json(result.stats);
            stats["viewpoints_written"] = result.viewpoints.size();
            stats["hotels_written"] = result.hotels.size();
            stats["incomplete"] = result.incomplete;
            auto rejected = nlohmann::ordered_json::array();
            for (const auto& r : result.rejected)
                rejected.push_back({{"name", r.record.name}, {"reason", r.reason}});
            stats["coord_rejections"] = rejected;
            write_file(in_out_dir / "stats.json", stats.dump(2) + "\n");
            std::cout << stats.dump(2) << "\n";
        } else if (emit->parsed()) {
            auto cfg = dba::config::AppConfig::from_cli(config_path);
            const unsigned seed = emit_seed.value_or(cfg.seed);
            const double split = emit_split.value_or(cfg.split);
            if (emit_mode == "sft-keyword") {
                auto loaded = dba::dataset::load_csv(emit_in, dba::dataset::CsvSchema::hotel,
                                                     dba::dataset::Source::travel_site);
                if (!loaded.errors.empty())
                    throw dba::data_error("hotel CSV has malformed rows", "parse");
                auto hotels = dba::dataset::to_hotels(dba::dataset::dedupe(loaded.records));
                auto ds = dba::dataset::emit_sft_keyword_dataset(
                    hotels, cfg.prompt_styles, split, seed, cfg.extraction_instruction);
                write_file(emit_out, dba::dataset::finetune_json(ds.train));
                nlohmann::ordered_json meta;
                meta["mode"] = "sft-keyword";
                meta["seed"] = ds.seed;
                meta["split"] = ds.split;
                meta["train"] = ds.train.size();
                meta["test"] = ds.test.size();
                write_file(emit_out.string() + ".meta.json", meta.dump(2) + "\n");
                std::string test_csv = dba::dataset::hotels_csv(ds.test);
                write_file(emit_out.parent_path() / "test_split.csv", test_csv);
                std::cout << meta.dump(2) << "\n";
            } else {
                auto loaded = dba::dataset::load_csv(emit_in, dba::dataset::CsvSchema::viewpoint,
                                                     dba::dataset::Source::encyclopedia);
                if (!loaded.errors.empty())
                    throw dba::data_error("viewpoint CSV has malformed rows", "parse");
                auto viewpoints =
                    dba::dataset::to_viewpoints(dba::dataset::dedupe(loaded.records));
                nlohmann::ordered_json meta;
                meta["seed"] = seed;
                if (emit_mode == "sft-gen") {
                    auto ds = dba::dataset::emit_sft_generation_dataset(
                        viewpoints, cfg.generation_instruction);
                    write_file(emit_out, dba::dataset::finetune_json(ds.examples));
                    meta["mode"] = "sft-gen";
                    meta["examples"] = ds.examples.size();
                    meta["skipped"] = ds.skipped;
                } else {
                    if (!emit_baselines)
                        throw dba::config_error("orpo mode requires --baselines");
                    auto baselines = read_baselines(*emit_baselines);
                    auto ds = dba::dataset::emit_orpo_dataset(viewpoints, baselines,
                                                              cfg.generation_instruction);
                    write_file(emit_out, dba::dataset::finetune_json(ds.examples));
                    meta["mode"] = "orpo";
                    meta["examples"] = ds.examples.size();
                    meta["degenerate"] = ds.degenerate;
                }
                write_file(emit_out.string() + ".meta.json", meta.dump(2) + "\n");
                std::cout << meta.dump(2) << "\n";
            }
        } else if (geocode_cmd->parsed()) {
            auto cfg = dba::config::AppConfig::from_cli(config_path);
            dba::pipeline::Pipeline pipe(cfg);
            auto point = pipe.geocoder().geocode(geocode_keyword);
            std::cout << "{\"keyword\":" << dba::jsonio::quote(geocode_keyword)
                      << ",\"lat\":" << dba::jsonio::degrees(point.lat())
                      << ",\"lon\":" << dba::jsonio::degrees(point.lon()) << "}\n";
        } else if (nearest_cmd->parsed()) {
            auto cfg = dba::config::AppConfig::from_cli(config_path);
            dba::pipeline::Pipeline pipe(cfg);
            auto results =
                dba::geo::nearest_viewpoints(dba::geo::GeoPoint(near_lat, near_lon),
                                             pipe.viewpoints(), near_k.value_or(cfg.k),
                                             pipe.earth());
            std::string out = "[";
            for (size_t i = 0; i < results.size(); ++i) {
                if (i) out.push_back(',');
                out += "{\"name\":" + dba::jsonio::quote(results[i].name) +
                       ",\"distance_km\":" + dba::jsonio::kilometers(results[i].distance_km) +
                       ",\"lat\":" + dba::jsonio::degrees(results[i].location.lat()) +
                       ",\"lon\":" + dba::jsonio::degrees(results[i].location.lon()) + "}";
            }
            std::cout << out << "]\n";
        } else if (query_cmd->parsed()) {
            auto cfg = dba::config::AppConfig::from_cli(config_path);
            dba::pipeline::Pipeline pipe(cfg);
            auto response = pipe.run_query(query_prompt, query_k);
            std::cout << response.to_json(query_timing) << "\n";
        } else if (exp_cmd->parsed()) {
            auto cfg = dba::config::AppConfig::from_cli(config_path);
            dba::pipeline::Pipeline pipe(cfg);
            auto mode = dba::pipeline::experiment_mode_from_string(exp_mode);
            auto pairs = read_test_pairs(exp_test_set, mode);
            dba::metrics::OneHotEmbedder embedder;
            auto run = dba::pipeline::run_experiment(pipe, pairs, mode, embedder, cfg.workers);
            auto doc = run.to_json();
            if (exp_out) write_file(*exp_out, doc.dump(2) + "\n");
            std::cout << doc.dump(2) << "\n";
        } else if (score_cmd->parsed()) {
            auto cfg = dba::config::AppConfig::from_cli(config_path);
            auto branch = dba::eval::branch_from_string(score_mode);
            dba::eval::CompositeWeights weights = cfg.weights;
            weights.branch = branch;
            dba::metrics::OneHotEmbedder embedder;
            dba::eval::BatchScorers scorers;
            scorers.embedder = &embedder;
            std::unique_ptr<dba::llm::ChatBackend> judge;
            if (branch == dba::eval::Branch::unstructured) {
                judge = dba::llm::make_backend(cfg.judge);
                scorers.fluency = [&](const std::string& c) {
                    return dba::llm::judge_score(c, std::nullopt,
                                                 dba::llm::JudgeRubric::fluency, *judge);
                };
                scorers.relevance = [&](const std::string& c, const std::string& r) {
                    return dba::llm::judge_score(c, r, dba::llm::JudgeRubric::relevance, *judge);
                };
            }
            auto components = dba::eval::score_item({score_candidate, score_reference}, branch,
                                                    scorers);
            auto composite = dba::eval::composite_score(components, weights);
            nlohmann::ordered_json j;
            j["components"] = dba::eval::components_json(components);
            j["raw"] = composite.raw;
            j["percent"] = composite.percent;
            std::cout << j.dump(2) << "\n";
        } else if (dist_cmd->parsed()) {
            auto system_scores = read_scores(dist_system);
            auto human_scores = read_scores(dist_human);
            auto report = dba::eval::distribution_report(system_scores, human_scores, dist_bins);
            std::cout << dba::eval::distribution_json(report).dump(2) << "\n";
        } else if (serve_cmd->parsed()) {
            auto cfg = dba::config::AppConfig::from_cli(config_path);
            const std::string host = serve_host.value_or(cfg.host);
            const int port = serve_port.value_or(cfg.port);
            dba::service::Service service(cfg);
            std::cerr << "listening on " << host << ":" << port << "\n";
            service.run(host, port);
        }
    } catch (const Error& e) {
        std::cerr << dba::pipeline::error_json(e) << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"internal\",\"message\":" << dba::jsonio::quote(e.what())
                  << "}\n";
        return 2;
    }
    return 0;
}
