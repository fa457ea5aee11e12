#include "reprograph/agent/http.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>

namespace reprograph::agent {

HttpChatBackend::HttpChatBackend(HttpOptions options) : options_(std::move(options)) {
    const auto scheme_end = options_.base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("backend base_url '" + options_.base_url + "' has no scheme");
    const auto path_start = options_.base_url.find('/', scheme_end + 3);
    origin_ = options_.base_url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : options_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (options_.model.empty()) throw ConfigError("live backend needs a model id");
}

std::string HttpChatBackend::complete(const AgentRequest& req) {
    httplib::Client client(origin_);
    if (!client.is_valid()) throw TransportError("unsupported backend url " + origin_);
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(options_.timeout_seconds * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    const Json body = {{"model", options_.model},
                       {"temperature", options_.temperature},
                       {"messages",
                        Json::array({{{"role", "system"}, {"content", req.prompt.system}},
                                     {{"role", "user"}, {"content", req.prompt.user}}})}};
    auto res = client.Post(prefix_ + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw TransportError("request to " + origin_ + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw TransportError("backend answered HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    try {
        const auto doc = Json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
        throw TransportError(std::string("unreadable chat-completion envelope: ") + e.what());
    }
}

} // namespace reprograph::agent
