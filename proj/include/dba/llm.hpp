// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "dba/error.hpp"
#include "dba/jsonio.hpp"
#include "dba/strings.hpp"

namespace dba::llm {

struct ChatParams {
    int max_tokens = 512;
    double temperature = 0.0;
};

struct ChatRequest {
    std::string system_instruction;
    std::string user_content;
    ChatParams params;
};

struct ChatResponse {
    std::string text;
    std::string backend_id;
    double latency_ms = 0.0;
};

enum class BackendKind { http, mock_echo, mock_table, replay };

inline BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "http") return BackendKind::http;
    if (s == "mock_echo") return BackendKind::mock_echo;
    if (s == "mock_table") return BackendKind::mock_table;
    if (s == "replay") return BackendKind::replay;
    throw config_error("unknown backend kind: " + std::string(s));
}

constexpr std::string_view to_string(BackendKind k) {
    switch (k) {
        case BackendKind::http: return "http";
        case BackendKind::mock_echo: return "mock_echo";
        case BackendKind::mock_table: return "mock_table";
        default: return "replay";
    }
}

struct BackendConfig {
    BackendKind kind = BackendKind::mock_echo;
    std::string endpoint;                  // http: base URL, e.g. http://127.0.0.1:8080
    std::string path = "/v1/chat/completions";
    std::string model = "default";
    std::filesystem::path fixture_path;    // mock_table / replay
    int timeout_ms = 30000;
    int max_retries = 2;
    int max_in_flight = 4;
    int backoff_base_ms = 200;
    std::string api_key_env = "LLM_API_KEY";

    void validate() const {
        if (kind == BackendKind::http && endpoint.empty())
            throw config_error("http backend requires an endpoint");
        if ((kind == BackendKind::mock_table || kind == BackendKind::replay) &&
            fixture_path.empty())
            throw config_error(std::string(to_string(kind)) + " backend requires a fixture_path");
        if (timeout_ms <= 0 || max_retries < 0 || max_in_flight < 1)
            throw config_error("backend limits out of range");
    }
};

/// Stable hash of a request (system + user + params, canonicalized); keys
/// replay fixtures and must not change across runs or platforms.
inline std::string request_hash(const ChatRequest& r) {
    char params[64];
    std::snprintf(params, sizeof(params), "%d\x1f%.6g", r.params.max_tokens, r.params.temperature);
    std::string canonical = r.system_instruction;
    canonical.push_back('\x1f');
    canonical += r.user_content;
    canonical.push_back('\x1f');
    canonical += params;
    return strings::format_hex64(strings::fnv1a64(canonical));
}

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string id() const = 0;

    /// Validates the request and times the completion.
    ChatResponse complete(const ChatRequest& request) {
        if (strings::trim(request.user_content).empty())
            throw data_error("user_content must be non-empty", "bad_argument");
        auto start = std::chrono::steady_clock::now();
        std::string text = run(request);
        auto elapsed = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
        return {std::move(text), id(), elapsed};
    }

protected:
    virtual std::string run(const ChatRequest& request) = 0;
};

class MockEchoBackend : public ChatBackend {
public:
    std::string id() const override { return "mock_echo"; }

protected:
    std::string run(const ChatRequest& request) override { return request.user_content; }
};

/// Exact-match lookup of user_content in a JSON object fixture.
class MockTableBackend : public ChatBackend {
public:
    explicit MockTableBackend(const std::filesystem::path& fixture_path) {
        std::ifstream in(fixture_path);
        if (!in)
            throw data_error("cannot open fixture: " + fixture_path.string(), "missing_file");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const std::exception& e) {
            throw data_error("bad fixture JSON: " + std::string(e.what()), "parse");
        }
        if (!doc.is_object())
            throw data_error("mock_table fixture must be a JSON object", "parse");
        for (auto& [key, value] : doc.items()) table_[key] = value.get<std::string>();
    }

    explicit MockTableBackend(std::unordered_map<std::string, std::string> table)
        : table_(std::move(table)) {}

    std::string id() const override { return "mock_table"; }

protected:
    std::string run(const ChatRequest& request) override {
        auto it = table_.find(request.user_content);
        if (it == table_.end())
            throw data_error("no fixture entry for: " + request.user_content, "fixture_miss");
        return it->second;
    }

private:
    std::unordered_map<std::string, std::string> table_;
};

/// Plays back recorded responses. The fixture is a JSON array of
/// {"hash": <request_hash>, "text": ...} entries; each matching request
/// consumes the next entry for its hash.
class ReplayBackend : public ChatBackend {
public:
    explicit ReplayBackend(const std::filesystem::path& fixture_path) {
        std::ifstream in(fixture_path);
        if (!in)
            throw data_error("cannot open fixture: " + fixture_path.string(), "missing_file");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const std::exception& e) {
            throw data_error("bad fixture JSON: " + std::string(e.what()), "parse");
        }
        if (!doc.is_array()) throw data_error("replay fixture must be a JSON array", "parse");
        for (const auto& entry : doc)
            queues_[entry.at("hash").get<std::string>()].push_back(
                entry.at("text").get<std::string>());
    }

    std::string id() const override { return "replay"; }

protected:
    std::string run(const ChatRequest& request) override {
        const std::string hash = request_hash(request);
        std::lock_guard lock(mutex_);
        auto it = queues_.find(hash);
        if (it == queues_.end() || it->second.empty())
            throw data_error("replay fixture exhausted for request hash " + hash,
                             "replay_exhausted");
        std::string text = std::move(it->second.front());
        it->second.pop_front();
        return text;
    }

private:
    std::mutex mutex_;
    std::unordered_map<std::string, std::deque<std::string>> queues_;
};

/// OpenAI-style chat-completions client. Transport failures retry with
/// exponential backoff up to max_retries; concurrent calls are limited to
/// max_in_flight.
class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(BackendConfig config)
        : config_(std::move(config)),
          in_flight_(std::max(1, config_.max_in_flight)) {
        config_.validate();
    }

    std::string id() const override { return "http:" + config_.model; }

protected:
    std::string run(const ChatRequest& request) override {
        in_flight_.acquire();
        struct Release {
            std::counting_semaphore<>& sem;
            ~Release() { sem.release(); }
        } release{in_flight_};

        nlohmann::ordered_json body;
        body["model"] = config_.model;
        body["messages"] = nlohmann::ordered_json::array(
            {{{"role", "system"}, {"content", request.system_instruction}},
             {{"role", "user"}, {"content", request.user_content}}});
        body["max_tokens"] = request.params.max_tokens;
        body["temperature"] = request.params.temperature;
        const std::string payload = body.dump();

        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(
                    config_.backoff_base_ms * (1 << (attempt - 1))));
            httplib::Client client(config_.endpoint);
            client.set_connection_timeout(0, config_.timeout_ms * 1000);
            client.set_read_timeout(0, config_.timeout_ms * 1000);
            httplib::Headers headers;
            if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
                headers.emplace("Authorization", std::string("Bearer ") + key);
            auto res = client.Post(config_.path, headers, payload, "application/json");
            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw data_error("chat endpoint returned status " + std::to_string(res->status) +
                                     ": " + res->body,
                                 "backend_status");
            return parse_reply(res->body);
        }
        throw transport_error("chat endpoint unreachable after " +
                              std::to_string(config_.max_retries + 1) + " attempts: " +
                              last_error);
    }

private:
    static std::string parse_reply(const std::string& body) {
        auto doc = nlohmann::json::parse(body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
            throw data_error("malformed chat completion response", "parse");
        const auto& choice = doc["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content"))
            return choice["message"]["content"].get<std::string>();
        if (choice.contains("text")) return choice["text"].get<std::string>();
        throw data_error("chat completion response has no content", "parse");
    }

    BackendConfig config_;
    std::counting_semaphore<> in_flight_;
};

inline std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
    config.validate();
    switch (config.kind) {
        case BackendKind::http: return std::make_unique<HttpChatBackend>(config);
        case BackendKind::mock_echo: return std::make_unique<MockEchoBackend>();
        case BackendKind::mock_table: return std::make_unique<MockTableBackend>(config.fixture_path);
        default: return std::make_unique<ReplayBackend>(config.fixture_path);
    }
}

// ---------------------------------------------------------------------------
// Role wrappers
// ---------------------------------------------------------------------------

/// Default system instruction for the keyword-extraction role. Overridable
/// through configuration.
inline constexpr std::string_view kExtractionInstruction =
    "Parse the input text, identify and return the names of entities in it that are marked as "
    "places. Ignore any other type of information, only extract and return place names";

/// Default system instruction for the viewpoint-introduction role.
inline constexpr std::string_view kGenerationInstruction =
    "You are a travel assistant. Write a brief introduction of the named tourist viewpoint, "
    "covering its history, its geography, and information visitors may find interesting.";

/// Extract a location keyword from a user prompt. The reply is trimmed of
/// surrounding whitespace and quotes; an empty result is a failure.
inline std::string extract_location_keyword(const std::string& user_prompt, ChatBackend& backend,
                                            std::string_view instruction = kExtractionInstruction) {
    if (strings::trim(user_prompt).empty())
        throw data_error("prompt must be non-empty", "bad_argument");
    ChatRequest request{std::string(instruction), user_prompt, {256, 0.0}};
    ChatResponse response = backend.complete(request);
    std::string keyword = strings::strip_quotes(response.text);
    if (keyword.empty())
        throw data_error("backend returned no keyword for prompt: " + user_prompt,
                         "extraction_failure");
    return keyword;
}

/// Generate an introduction for a viewpoint name. With a mock_table backend
/// the fixture maps names to intros, which makes the pipeline deterministic.
inline std::string generate_viewpoint_intro(const std::string& viewpoint_name,
                                            ChatBackend& backend,
                                            std::string_view instruction = kGenerationInstruction,
                                            double temperature = 0.0) {
    if (strings::trim(viewpoint_name).empty())
        throw data_error("viewpoint name must be non-empty", "bad_argument");
    ChatRequest request{std::string(instruction), viewpoint_name, {1024, temperature}};
    return backend.complete(request).text;
}

enum class JudgeRubric { fluency, relevance };

namespace detail {

inline std::optional<double> first_number(const std::string& text) {
    static const std::regex number(R"(([0-9]+(\.[0-9]+)?|\.[0-9]+))");
    std::smatch m;
    if (!std::regex_search(text, m, number)) return std::nullopt;
    return std::stod(m.str(1));
}

}  // namespace detail

/// Ask a judge backend for a 0-100 numeric quality score and normalize it
/// to [0, 1]. The first number in the reply is taken; an unparseable reply
/// is retried up to `parse_retries` times before failing.
inline double judge_score(const std::string& candidate, const std::optional<std::string>& reference,
                          JudgeRubric rubric, ChatBackend& backend, int parse_retries = 2) {
    if (rubric == JudgeRubric::relevance && !reference)
        throw data_error("relevance judging requires a reference", "bad_argument");

    ChatRequest request;
    request.params = {16, 0.0};
    if (rubric == JudgeRubric::fluency) {
        request.system_instruction =
            "You are a strict evaluator. Rate the fluency of the user's text on a scale from 0 "
            "to 100. Reply with a single number and nothing else.";
        request.user_content = candidate;
    } else {
        request.system_instruction =
            "You are a strict evaluator. Rate how relevant the candidate text is to the "
            "reference text on a scale from 0 to 100. Reply with a single number and nothing "
            "else.";
        request.user_content = "Candidate:\n" + candidate + "\n\nReference:\n" + *reference;
    }

    for (int attempt = 0; attempt <= parse_retries; ++attempt) {
        ChatResponse response = backend.complete(request);
        if (auto value = detail::first_number(response.text))
            return std::clamp(*value / 100.0, 0.0, 1.0);
    }
    throw data_error("judge reply had no numeric score after " +
                         std::to_string(parse_retries + 1) + " attempts",
                     "judge_parse");
}

}  // namespace dba::llm
