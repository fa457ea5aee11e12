#include "reprograph/agent/backend.hpp"

#include <chrono>

namespace reprograph::agent {

std::string_view to_string(ParseOutcome o) {
    switch (o) {
        case ParseOutcome::ok: return "ok";
        case ParseOutcome::repaired: return "repaired";
        case ParseOutcome::failed: return "failed";
    }
    return "failed";
}

Json to_json(const Transcript& t) {
    return {{"role", t.role},
            {"template", t.template_name},
            {"request", {{"system", t.request.system}, {"user", t.request.user}}},
            {"responses", t.responses},
            {"errors", t.errors},
            {"outcome", std::string(to_string(t.outcome))},
            {"retries", t.retries},
            {"latency_ms", t.latency_ms},
            {"model", t.model},
            {"validated", t.validated}};
}

Transcript transcript_from_json(const Json& j) {
    Transcript t;
    t.role = j.at("role").get<std::string>();
    t.template_name = j.at("template").get<std::string>();
    t.request = {j.at("request").at("system").get<std::string>(), j.at("request").at("user").get<std::string>()};
    t.responses = j.at("responses").get<std::vector<std::string>>();
    t.errors = j.at("errors").get<std::vector<std::string>>();
    const auto outcome = j.at("outcome").get<std::string>();
    t.outcome = outcome == "ok" ? ParseOutcome::ok : outcome == "repaired" ? ParseOutcome::repaired : ParseOutcome::failed;
    t.retries = j.at("retries").get<int>();
    t.latency_ms = j.at("latency_ms").get<double>();
    t.model = j.at("model").get<std::string>();
    t.validated = j.value("validated", Json());
    return t;
}

TranscriptLog::TranscriptLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
}

void TranscriptLog::append(const Transcript& t) {
    std::lock_guard lock(mu_);
    entries_.push_back(t);
    if (path_) {
        std::ofstream out(*path_, std::ios::app | std::ios::binary);
        if (!out) throw Error("cannot append transcript to " + path_->string());
        out << to_json(t).dump() << '\n';
    }
}

std::vector<Transcript> TranscriptLog::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

std::vector<Transcript> read_transcripts(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read transcripts " + path.string());
    std::vector<Transcript> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(transcript_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return out;
}

CallResult call_with_retry(Backend& backend, const AgentRequest& req, int max_retries, TranscriptLog* log) {
    AgentRequest current = req;
    if (current.template_name.empty()) current.template_name = std::string(template_name(req.role));

    CallResult result;
    auto& t = result.transcript;
    t.role = std::string(to_string(req.role));
    t.template_name = current.template_name;
    t.request = current.prompt;
    t.model = backend.model_id();

    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
        if (!backend.deterministic())
            t.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        if (log) log->append(t);
    };

    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        std::string raw;
        try {
            raw = backend.complete(current);
        } catch (const TransportError& e) {
            t.errors.push_back(std::string("transport: ") + e.what());
            t.outcome = ParseOutcome::failed;
            finish();
            throw;
        }
        t.responses.push_back(raw);
        t.retries = attempt;
        try {
            result.value = parse_response(current.template_name, raw, current.context);
            t.outcome = attempt == 0 ? ParseOutcome::ok : ParseOutcome::repaired;
            t.validated = *result.value;
            finish();
            return result;
        } catch (const ResponseError& e) {
            t.errors.push_back(e.what());
            current.prompt.user = req.prompt.user + "\n\n# Previous Response Rejected\n" + e.what() +
                                  "\nReturn a corrected response. Output JSON only.";
            current.payload["previous_error"] = e.what();
        }
    }
    t.outcome = ParseOutcome::failed;
    finish();
    return result;
}

BoundedBackend::BoundedBackend(Backend& inner, int max_in_flight)
    : inner_(inner), slots_(std::max(1, std::min(max_in_flight, 1024))) {}

std::string BoundedBackend::complete(const AgentRequest& req) {
    slots_.acquire();
    struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
    } release{slots_};
    return inner_.complete(req);
}

Json AgentClient::call(Role role, const std::map<std::string, std::string>& vars, Json payload, ParseContext ctx,
                       std::string_view template_override) {
    AgentRequest req;
    req.role = role;
    req.template_name = template_override.empty() ? std::string(template_name(role)) : std::string(template_override);
    req.prompt = render_prompt(builtin_template(req.template_name), vars);
    req.payload = std::move(payload);
    req.context = std::move(ctx);
    auto result = call_with_retry(backend_, req, retries_, log_);
    if (!result.value)
        throw AgentCallFailed(role, "no valid response after " + std::to_string(result.transcript.retries + 1) +
                                        " calls: " + result.transcript.errors.back());
    return *result.value;
}

} // namespace reprograph::agent
