// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <memory>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "dba/error.hpp"
#include "dba/eval.hpp"
#include "dba/jsonio.hpp"
#include "dba/metrics.hpp"
#include "dba/pipeline.hpp"

namespace dba::service {

inline int status_for(const Error& e) {
    if (e.code() == "bad_argument") return 400;
    if (e.code() == "not_found") return 404;
    if (e.kind() == ErrorKind::transport) return 502;
    return 500;
}

/// HTTP front end over the pipeline. Catalog loading can be deferred so the
/// service can report 503 until it is ready; all handlers are safe to call
/// concurrently once the pipeline is up.
class Service {
public:
    explicit Service(config::AppConfig cfg, bool defer_load = false) : cfg_(std::move(cfg)) {
        if (!defer_load) load_catalogs();
        install_routes();
    }

    void load_catalogs() { pipeline_ = std::make_shared<pipeline::Pipeline>(cfg_); }
    bool catalogs_loaded() const { return pipeline_ != nullptr; }

    httplib::Server& server() { return server_; }

    /// Bind and serve until stopped. Throws when the port is taken.
    void run(const std::string& host, int port) {
        if (!server_.bind_to_port(host, port))
            throw config_error("cannot bind " + host + ":" + std::to_string(port));
        server_.listen_after_bind();
    }

private:
    void install_routes() {
        server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            nlohmann::ordered_json j;
            bool up = catalogs_loaded();
            j["status"] = up ? "ok" : "loading";
            j["catalogs_loaded"] = up;
            auto kinds = nlohmann::ordered_json::object();
            kinds["extractor"] = std::string(llm::to_string(cfg_.extractor.kind));
            kinds["generator"] = std::string(llm::to_string(cfg_.generator.kind));
            kinds["judge"] = std::string(llm::to_string(cfg_.judge.kind));
            j["backend_kinds"] = kinds;
            res.status = up ? 200 : 503;
            res.set_content(j.dump(), "application/json");
        });

        server_.Post("/recommend", [this](const httplib::Request& req, httplib::Response& res) {
            guard(res, [&] {
                auto pipe = require_pipeline(res);
                if (!pipe) return;
                auto body = nlohmann::json::parse(req.body, nullptr, false);
                if (body.is_discarded() || !body.contains("prompt") ||
                    !body["prompt"].is_string())
                    throw data_error("body must be JSON with a string field 'prompt'",
                                     "bad_argument");
                std::optional<std::size_t> k;
                if (body.contains("k")) {
                    if (!body["k"].is_number_unsigned() || body["k"].get<std::size_t>() < 1)
                        throw data_error("field 'k' must be a positive integer", "bad_argument");
                    k = body["k"].get<std::size_t>();
                }
                auto response = pipe->run_query(body["prompt"].get<std::string>(), k);
                res.status = 200;
                res.set_content(response.to_json(), "application/json");
            });
        });

        server_.Get("/nearest", [this](const httplib::Request& req, httplib::Response& res) {
            guard(res, [&] {
                auto pipe = require_pipeline(res);
                if (!pipe) return;
                auto param = [&](const char* name) -> double {
                    if (!req.has_param(name))
                        throw data_error(std::string("missing query parameter: ") + name,
                                         "bad_argument");
                    try {
                        return std::stod(req.get_param_value(name));
                    } catch (const std::exception&) {
                        throw data_error(std::string("parameter ") + name + " must be numeric",
                                         "bad_argument");
                    }
                };
                const double lat = param("lat");
                const double lon = param("lon");
                if (!(lat >= -90.0 && lat <= 90.0))
                    throw data_error("parameter lat must lie in [-90, 90]", "bad_argument");
                std::size_t k = cfg_.k;
                if (req.has_param("k")) {
                    int parsed = 0;
                    try {
                        parsed = std::stoi(req.get_param_value("k"));
                    } catch (const std::exception&) {
                        throw data_error("parameter k must be an integer", "bad_argument");
                    }
                    if (parsed < 1)
                        throw data_error("parameter k must be at least 1", "bad_argument");
                    k = static_cast<std::size_t>(parsed);
                }
                auto results = geo::nearest_viewpoints(geo::GeoPoint(lat, lon),
                                                       pipe->viewpoints(), k, pipe->earth());
                std::string out = "[";
                for (size_t i = 0; i < results.size(); ++i) {
                    const auto& r = results[i];
                    if (i) out.push_back(',');
                    out += "{\"name\":" + jsonio::quote(r.name) +
                           ",\"distance_km\":" + jsonio::kilometers(r.distance_km) +
                           ",\"lat\":" + jsonio::degrees(r.location.lat()) +
                           ",\"lon\":" + jsonio::degrees(r.location.lon()) + "}";
                }
                out += "]";
                res.status = 200;
                res.set_content(out, "application/json");
            });
        });

        server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
            guard(res, [&] {
                auto pipe = require_pipeline(res);
                if (!pipe) return;
                auto body = nlohmann::json::parse(req.body, nullptr, false);
                if (body.is_discarded() || !body.contains("candidate") ||
                    !body.contains("reference"))
                    throw data_error("body must be JSON with 'candidate' and 'reference'",
                                     "bad_argument");
                const auto mode = eval::branch_from_string(
                    body.value("mode", std::string("unstructured")));
                eval::EvalItem item{body["candidate"].get<std::string>(),
                                    body["reference"].get<std::string>()};
                eval::CompositeWeights weights = cfg_.weights;
                weights.branch = mode;
                metrics::OneHotEmbedder embedder;
                eval::ScoreComponents components =
                    eval::score_item(item, mode, pipe->scorers(embedder));
                auto composite = eval::composite_score(components, weights);
                nlohmann::ordered_json j;
                j["components"] = eval::components_json(components);
                j["raw"] = composite.raw;
                j["percent"] = composite.percent;
                res.status = 200;
                res.set_content(j.dump(), "application/json");
            });
        });
    }

    std::shared_ptr<pipeline::Pipeline> require_pipeline(httplib::Response& res) {
        auto pipe = pipeline_;
        if (!pipe) {
            res.status = 503;
            res.set_content("{\"error\":\"loading\",\"message\":\"catalogs not loaded\"}",
                            "application/json");
        }
        return pipe;
    }

    template <typename Fn>
    void guard(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            res.status = status_for(e);
            res.set_content(pipeline::error_json(e), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content("{\"error\":\"internal\",\"message\":" + jsonio::quote(e.what()) + "}",
                            "application/json");
        }
    }

    config::AppConfig cfg_;
    std::shared_ptr<pipeline::Pipeline> pipeline_;
    httplib::Server server_;
};

}  // namespace dba::service
