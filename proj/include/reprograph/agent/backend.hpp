#pragma once
// Backends, the retry policy and call transcripts.

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "reprograph/agent/response.hpp"
#include "reprograph/agent/roles.hpp"

namespace reprograph::agent {

inline constexpr int kDefaultRetries = 2;

struct AgentRequest {
    Role role = Role::summarizer;
    std::string template_name;  // defaults to the role's template
    RenderedPrompt prompt;
    Json payload = Json::object();  // structured inputs; mocks read these instead of prompt text
    ParseContext context;
};

class Backend {
public:
    virtual ~Backend() = default;
    // Raw response text. Throws TransportError if nothing was delivered.
    virtual std::string complete(const AgentRequest& req) = 0;
    virtual std::string model_id() const = 0;
    // Deterministic backends record zero latency so transcripts are reproducible.
    virtual bool deterministic() const { return false; }
};

enum class ParseOutcome { ok, repaired, failed };

std::string_view to_string(ParseOutcome o);

struct Transcript {
    std::string role;
    std::string template_name;
    RenderedPrompt request;             // the first prompt sent
    std::vector<std::string> responses; // raw text, one per call
    std::vector<std::string> errors;    // validation error per rejected response
    ParseOutcome outcome = ParseOutcome::failed;
    int retries = 0;
    double latency_ms = 0.0;
    std::string model;
    Json validated;                     // null unless accepted

    bool operator==(const Transcript&) const = default;
};

Json to_json(const Transcript& t);
Transcript transcript_from_json(const Json& j);

// Append-only JSONL transcript sink, safe for concurrent callers. Without a
// path it only keeps transcripts in memory.
class TranscriptLog {
public:
    TranscriptLog() = default;
    explicit TranscriptLog(std::filesystem::path path);

    void append(const Transcript& t);
    std::vector<Transcript> entries() const;
    const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

private:
    mutable std::mutex mu_;
    std::optional<std::filesystem::path> path_;
    std::vector<Transcript> entries_;
};

std::vector<Transcript> read_transcripts(const std::filesystem::path& path);

struct CallResult {
    std::optional<Json> value;
    Transcript transcript;
};

// Asks, validates, and on rejection re-asks with the validation error appended,
// up to max_retries more times. TransportError propagates after being logged.
CallResult call_with_retry(Backend& backend, const AgentRequest& req, int max_retries = kDefaultRetries,
                           TranscriptLog* log = nullptr);

// Caps the number of concurrent in-flight calls into another backend.
class BoundedBackend : public Backend {
public:
    BoundedBackend(Backend& inner, int max_in_flight);
    std::string complete(const AgentRequest& req) override;
    std::string model_id() const override { return inner_.model_id(); }
    bool deterministic() const override { return inner_.deterministic(); }

private:
    Backend& inner_;
    std::counting_semaphore<1024> slots_;
};

class AgentCallFailed : public Error {
public:
    AgentCallFailed(Role role, const std::string& what)
        : Error(std::string(to_string(role)) + ": " + what), role_(role) {}
    Role role() const noexcept { return role_; }

private:
    Role role_;
};

// Renders, calls and validates on behalf of the pipeline adapters.
class AgentClient {
public:
    AgentClient(Backend& backend, TranscriptLog* log = nullptr, int max_retries = kDefaultRetries)
        : backend_(backend), log_(log), retries_(max_retries) {}

    // Throws AgentCallFailed when every attempt was rejected.
    Json call(Role role, const std::map<std::string, std::string>& vars, Json payload, ParseContext ctx = {},
              std::string_view template_override = {});

    Backend& backend() noexcept { return backend_; }

private:
    Backend& backend_;
    TranscriptLog* log_;
    int retries_;
};

} // namespace reprograph::agent
