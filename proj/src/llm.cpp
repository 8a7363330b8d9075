#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <openssl/evp.h>

#include <cstdlib>
#include <regex>

#include "metamorph/generation.hpp"
#include "metamorph/resources.hpp"

namespace metamorph {

std::string render_prompt(std::string_view templ, const std::map<std::string, std::string> &values) {
    std::string out;
    std::size_t i = 0;
    while (i < templ.size()) {
        if (templ[i] == '{') {
            const std::size_t close = templ.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = values.find(std::string(templ.substr(i + 1, close - i - 1)));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(templ[i++]);
    }
    return out;
}

std::string replay_key(const Json &body) {
    const std::string text = to_canonical(body);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
    static const char *hex = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out.push_back(hex[digest[k] >> 4]);
        out.push_back(hex[digest[k] & 0xf]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transports

HttpTransport::HttpTransport(HttpConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty() || config_.api_key.empty()) {
        throw ProviderError("Transport", "LLM endpoint or credentials missing");
    }
}

std::unique_ptr<HttpTransport> HttpTransport::from_environment(const std::string &model) {
    const char *key = std::getenv("LLM_API_KEY");
    const char *url = std::getenv("LLM_BASE_URL");
    if (key == nullptr || *key == '\0') {
        throw ProviderError("Transport", "LLM_API_KEY is not set");
    }
    if (url == nullptr || *url == '\0') {
        throw ProviderError("Transport", "LLM_BASE_URL is not set");
    }
    HttpConfig c;
    c.base_url = url;
    c.api_key = key;
    if (!model.empty()) {
        c.model = model;
    }
    return std::make_unique<HttpTransport>(c);
}

std::string HttpTransport::complete(const Json &body) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.base_url, m, url_re)) {
        throw ProviderError("Transport", "malformed LLM_BASE_URL " + config_.base_url);
    }
    std::string path = m[2].matched ? m[2].str() : "";
    while (!path.empty() && path.back() == '/') {
        path.pop_back();
    }
    httplib::Client client(m[1].str());
    client.set_bearer_token_auth(config_.api_key);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    auto res = client.Post(path + "/chat/completions", body.dump(), "application/json");
    if (!res) {
        throw ProviderError("Transport", "request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ProviderError("Transport", "HTTP " + std::to_string(res->status));
    }
    try {
        const Json j = Json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception &e) {
        throw ProviderError("Format", std::string("unexpected completion envelope: ") + e.what());
    }
}

ReplayTransport::ReplayTransport(const std::filesystem::path &file) {
    Json doc;
    try {
        doc = read_json(file);
    } catch (const Error &e) {
        throw ProviderError("Transport", e.what());
    }
    if (!doc.is_object() || !doc.contains("entries") || !doc.at("entries").is_array()) {
        throw ProviderError("Transport", "replay file lacks an entries array");
    }
    for (const auto &e : doc.at("entries")) {
        if (!e.is_object() || !e.value("key", Json()).is_string() || !e.value("response", Json()).is_string()) {
            throw ProviderError("Transport", "malformed replay entry");
        }
        const std::string key = e.at("key").get<std::string>();
        if (key == "*") {
            sequence_.push_back(e.at("response").get<std::string>());
        } else {
            keyed_.emplace(key, e.at("response").get<std::string>());
        }
    }
}

std::string ReplayTransport::complete(const Json &body) {
    if (auto it = keyed_.find(replay_key(body)); it != keyed_.end()) {
        return it->second;
    }
    if (sequence_.empty()) {
        throw ProviderError("Transport", "no replay entry for request " + replay_key(body));
    }
    std::string r = std::move(sequence_.front());
    sequence_.pop_front();
    return r;
}

RecordingTransport::RecordingTransport(std::unique_ptr<Transport> inner, std::filesystem::path file)
    : inner_(std::move(inner)), file_(std::move(file)) {}

std::string RecordingTransport::complete(const Json &body) {
    std::string response = inner_->complete(body);
    entries_.push_back(Json{{"key", replay_key(body)}, {"response", response}});
    write_canonical(file_, Json{{"version", "1.0"}, {"entries", entries_}});
    return response;
}

// ---------------------------------------------------------------------------
// LLM provider

namespace {

std::string prompt(const std::string &name) {
    auto text = embedded_resource("prompts/" + name + ".txt");
    if (!text) {
        throw ConfigError("missing prompt template " + name);
    }
    return std::string(*text);
}

std::string dump(const Json &j) { return j.dump(2); }

std::map<std::string, std::string> prompt_values(const ProviderRequest &req) {
    std::map<std::string, std::string> v;
    const ExtractionOutput &ex = *req.extraction;
    v["system_name"] = ex.variables.model_name;
    v["system_summary"] = ex.system_summary;
    Json tcs = Json::array();
    for (const auto &t : ex.test_conditions) {
        tcs.push_back(t.to_json());
    }
    v["test_conditions"] = dump(tcs);
    Json vrs = Json::array();
    for (const auto &r : ex.relationships) {
        vrs.push_back(r.to_json());
    }
    v["relationships"] = dump(vrs);
    v["model_variables"] = dump(ex.variables.to_json().at("variables"));
    v["initial_conditions"] = dump(Json(ex.initial_conditions));
    Json hist = Json::array();
    for (const auto &batch : req.history) {
        for (const auto &mr : batch) {
            hist.push_back(mr.to_json());
        }
    }
    v["history"] = dump(hist);
    std::string priority;
    std::string ranks;
    for (std::size_t i = 0; i < req.priority_order.size(); ++i) {
        priority += std::to_string(i + 1) + ". " + to_string(req.priority_order[i]) + "\n";
        ranks += (i == 0 ? "" : ", ") + to_string(req.priority_order[i]) + "=" +
                 std::to_string(category_priority(req.priority_order[i]));
    }
    v["priority"] = priority;
    v["priority_ranks"] = ranks;
    std::string kinds;
    for (std::size_t i = 0; i < std::size(kAllRelationKinds); ++i) {
        kinds += (i == 0 ? "" : ", ") + to_string(kAllRelationKinds[i]);
    }
    v["relation_kinds"] = kinds;
    v["mr_count"] = std::to_string(req.budget);
    v["tests_per_mr"] = std::to_string(req.budget);
    Json mrs = Json::array();
    for (const auto &mr : req.mrs) {
        mrs.push_back(mr.to_json());
    }
    v["mrs"] = dump(mrs);
    if (!req.mrs.empty()) {
        v["mr"] = dump(req.mrs.front().to_json());
        v["mr_id"] = req.mrs.front().id;
    }
    v["tests"] = dump(Json(req.tests));
    if (req.grid) {
        v["start"] = Json(req.grid->start()).dump();
        v["stop"] = Json(req.grid->stop()).dump();
        v["step"] = Json(req.grid->step()).dump();
    }
    return v;
}

const char *expected_key(RequestKind kind) {
    return kind == RequestKind::MrGeneration || kind == RequestKind::MrRefinement ? "mrs" : "tests";
}

/// Empty string when `content` is acceptable, else the reason.
std::string format_problem(const std::string &content, const char *key, Json &parsed) {
    try {
        parsed = Json::parse(content);
    } catch (const Json::parse_error &) {
        return "not valid JSON";
    }
    if (!parsed.is_object()) {
        return "not a JSON object";
    }
    if (!parsed.contains(key) || !parsed.at(key).is_array()) {
        return std::string("missing \"") + key + "\" array";
    }
    return "";
}

} // namespace

LlmProvider::LlmProvider(std::unique_ptr<Transport> transport, std::string model, int max_requests)
    : transport_(std::move(transport)), model_(std::move(model)), max_requests_(max_requests) {}

Json LlmProvider::request_body(const ProviderRequest &request) const {
    if (request.extraction == nullptr) {
        throw ProviderError("Format", "request without extraction");
    }
    const auto values = prompt_values(request);
    return Json{{"model", model_},
                {"temperature", 0},
                {"response_format", Json{{"type", "json_object"}}},
                {"messages", Json::array({Json{{"role", "system"}, {"content", render_prompt(prompt("system"), values)}},
                                          Json{{"role", "user"},
                                               {"content", render_prompt(prompt(to_string(request.kind)), values)}}})}};
}

Json LlmProvider::respond(const ProviderRequest &request) {
    Json body = request_body(request);
    const char *key = expected_key(request.kind);
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (requests_ >= max_requests_) {
            throw ProviderError("Budget", "request budget of " + std::to_string(max_requests_) + " exhausted");
        }
        ++requests_;
        const std::string content = transport_->complete(body);
        Json parsed;
        const std::string problem = format_problem(content, key, parsed);
        if (problem.empty()) {
            return parsed;
        }
        if (attempt == 1) {
            throw ProviderError("Format", "response after reprompt: " + problem);
        }
        body["messages"].push_back(Json{{"role", "assistant"}, {"content", content}});
        body["messages"].push_back(
            Json{{"role", "user"}, {"content", render_prompt(prompt("reprompt"), {{"error", problem}})}});
    }
    throw ProviderError("Format", "unreachable");
}

} // namespace metamorph
