#pragma once
// Live backend speaking a minimal chat-completion contract over HTTP(S).

#include <string>

#include "reprograph/agent/backend.hpp"

namespace reprograph::agent {

struct HttpOptions {
    std::string base_url;                       // e.g. https://host/v1; "/chat/completions" is appended
    std::string model;
    std::string api_key_env = "REPROGRAPH_API_KEY";
    double temperature = 0.0;
    double timeout_seconds = 120.0;
};

class HttpChatBackend : public Backend {
public:
    explicit HttpChatBackend(HttpOptions options);
    std::string complete(const AgentRequest& req) override;
    std::string model_id() const override { return options_.model; }

private:
    HttpOptions options_;
    std::string origin_;  // scheme://host[:port]
    std::string prefix_;  // path below the origin
};

} // namespace reprograph::agent
