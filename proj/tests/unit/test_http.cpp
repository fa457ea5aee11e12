#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "reprograph/agent/backend.hpp"
#include "reprograph/agent/http.hpp"
#include "reprograph/error.hpp"

using namespace reprograph;
using namespace reprograph::agent;

namespace {

// Chat-completion stand-in on an ephemeral localhost port.
class FakeChatServer {
public:
    FakeChatServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            std::string reply;
            int status = 200;
            double delay = 0.0;
            {
                std::lock_guard lock(mu_);
                bodies.push_back(Json::parse(req.body));
                auth.push_back(req.get_header_value("Authorization"));
                reply = replies.empty() ? "{}" : replies.front();
                if (replies.size() > 1) replies.erase(replies.begin());
                status = status_;
                delay = delay_;
            }
            if (delay > 0) std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            res.status = status;
            if (status != 200) {
                res.set_content("quota exceeded", "text/plain");
                return;
            }
            if (reply == "<garbled>") {
                res.set_content("{\"choices\": []}", "application/json");
                return;
            }
            const Json envelope = {{"choices", Json::array({{{"message", {{"role", "assistant"}, {"content", reply}}}}})}};
            res.set_content(envelope.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeChatServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    void set_status(int s) {
        std::lock_guard lock(mu_);
        status_ = s;
    }
    void set_delay(double d) {
        std::lock_guard lock(mu_);
        delay_ = d;
    }

    std::vector<std::string> replies;
    std::vector<Json> bodies;
    std::vector<std::string> auth;

private:
    httplib::Server server_;
    std::thread thread_;
    std::mutex mu_;
    int port_ = 0;
    int status_ = 200;
    double delay_ = 0.0;
};

AgentRequest reviewer_request() {
    AgentRequest r;
    r.role = Role::reviewer;
    r.prompt = {"be a reviewer", "rank these"};
    return r;
}

HttpOptions options_for(const FakeChatServer& s) {
    HttpOptions o;
    o.base_url = s.base_url();
    o.model = "test-model";
    o.api_key_env = "REPROGRAPH_TEST_KEY";
    o.temperature = 0.25;
    o.timeout_seconds = 5.0;
    return o;
}

} // namespace

TEST_CASE("chat-completion request shape and auth header") {
    FakeChatServer server;
    server.replies = {R"({"ranking": [{"paper_id": "A", "rank": 1}]})"};
    ::setenv("REPROGRAPH_TEST_KEY", "sekret", 1);
    HttpChatBackend backend(options_for(server));
    CHECK(backend.model_id() == "test-model");
    CHECK_FALSE(backend.deterministic());

    const auto raw = backend.complete(reviewer_request());
    CHECK(Json::parse(raw)["ranking"][0]["paper_id"] == "A");
    REQUIRE(server.bodies.size() == 1);
    const auto& body = server.bodies[0];
    CHECK(body["model"] == "test-model");
    CHECK(body["temperature"] == 0.25);
    CHECK(body["messages"][0] == Json({{"role", "system"}, {"content", "be a reviewer"}}));
    CHECK(body["messages"][1] == Json({{"role", "user"}, {"content", "rank these"}}));
    CHECK(server.auth[0] == "Bearer sekret");

    ::unsetenv("REPROGRAPH_TEST_KEY");
    backend.complete(reviewer_request());
    CHECK(server.auth[1].empty());
}

TEST_CASE("retry runs over the live contract") {
    FakeChatServer server;
    server.replies = {"sorry, here you go: {\"rank\": ", R"({"ranking": []})"};
    HttpChatBackend backend(options_for(server));
    TranscriptLog log;
    const auto r = call_with_retry(backend, reviewer_request(), 2, &log);
    CHECK(r.value.has_value());
    CHECK(r.transcript.outcome == ParseOutcome::repaired);
    CHECK(r.transcript.model == "test-model");
    CHECK(r.transcript.latency_ms > 0.0);
    REQUIRE(server.bodies.size() == 2);
    CHECK(server.bodies[1]["messages"][1]["content"].get<std::string>().find("Previous Response Rejected") !=
          std::string::npos);
}

TEST_CASE("transport failures are distinct from bad responses") {
    FakeChatServer server;
    HttpChatBackend backend(options_for(server));

    server.set_status(429);
    CHECK_THROWS_WITH_AS(backend.complete(reviewer_request()), doctest::Contains("HTTP 429"), TransportError);
    server.set_status(200);

    server.replies = {"<garbled>"};
    CHECK_THROWS_WITH_AS(backend.complete(reviewer_request()), doctest::Contains("envelope"), TransportError);

    auto slow_opts = options_for(server);
    slow_opts.timeout_seconds = 0.3;
    server.set_delay(1.5);
    HttpChatBackend slow(slow_opts);
    CHECK_THROWS_AS(slow.complete(reviewer_request()), TransportError);
    server.set_delay(0.0);

    auto dead = options_for(server);
    dead.base_url = "http://127.0.0.1:1/v1";
    CHECK_THROWS_AS(HttpChatBackend(dead).complete(reviewer_request()), TransportError);
}

TEST_CASE("live backend configuration errors") {
    HttpOptions o;
    o.base_url = "localhost:8080";
    o.model = "m";
    CHECK_THROWS_AS(HttpChatBackend{o}, ConfigError);
    o.base_url = "http://localhost:8080/v1/";
    o.model = "";
    CHECK_THROWS_AS(HttpChatBackend{o}, ConfigError);
}
