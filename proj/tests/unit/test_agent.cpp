#include <doctest.h>

#include <atomic>
#include <random>
#include <thread>

#include "reprograph/agent/adapters.hpp"
#include "reprograph/agent/assets.hpp"
#include "reprograph/agent/backend.hpp"
#include "reprograph/agent/mock.hpp"
#include "reprograph/agent/response.hpp"
#include "reprograph/agent/roles.hpp"
#include "reprograph/agent/schema.hpp"
#include "reprograph/error.hpp"
#include "support.hpp"

using namespace reprograph;
using namespace reprograph::agent;
using testing_support::fixture;
using testing_support::slurp;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

std::string golden(const std::string& name) { return slurp(fixture("agent/golden/" + name + ".json")); }

// Replays canned raw responses in order, repeating the last one.
class Canned : public Backend {
public:
    explicit Canned(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const AgentRequest& req) override {
        seen.push_back(req);
        const auto i = std::min(seen.size() - 1, replies_.size() - 1);
        if (replies_[i] == "<transport>") throw TransportError("connection refused");
        return replies_[i];
    }
    std::string model_id() const override { return "canned"; }
    bool deterministic() const override { return true; }
    std::vector<AgentRequest> seen;

private:
    std::vector<std::string> replies_;
};

AgentRequest request(Role role) {
    AgentRequest r;
    r.role = role;
    r.prompt = {"system", "user"};
    return r;
}

Json summary_with(const std::string& text) {
    return {{"paper_id", "x"}, {"method_summary", text}, {"components", Json::array()}};
}

} // namespace

TEST_CASE("every role has a template and a schema") {
    for (Role r : kAllRoles) {
        CAPTURE(to_string(r));
        CHECK(role_from_string(to_string(r)) == r);
        const auto& t = builtin_template(r);
        CHECK_FALSE(t.system_text.empty());
        CHECK_FALSE(t.user_text.empty());
        CHECK(response_schema(template_name(r)).is_object());
        CHECK(embedded_assets().count("prompts/" + std::string(template_name(r)) + ".prompt"));
        CHECK(embedded_assets().count("schemas/" + std::string(template_name(r)) + ".schema.json"));
    }
    CHECK(builtin_template(kOrchestratorTemplate).user_text.find("iterative_repair") != std::string::npos);
    CHECK_THROWS_AS(builtin_template("nope"), ConfigError);
    CHECK_THROWS_AS(role_from_string("critic"), Error);
}

TEST_CASE("embedded assets match the files on disk") {
    for (const auto& [rel, text] : embedded_assets()) {
        CAPTURE(rel);
        CHECK(slurp(fs::path(FIXTURE_DIR) / "../../assets" / rel) == text);
    }
}

TEST_CASE("prompt rendering") {
    const auto& t = builtin_template(Role::summarizer);
    CHECK(t.placeholders() == std::vector<std::string>{"paper_id", "method_experiments"});
    const auto p = render_prompt(t, {{"paper_id", "P07"}, {"method_experiments", "text"}});
    CHECK(p.user.find("P07") != std::string::npos);
    CHECK(p.user.find("{{") == std::string::npos);
    CHECK(p.system.find("{{") == std::string::npos);
    CHECK_THROWS_WITH_AS(render_prompt(t, {{"method_experiments", "text"}}), doctest::Contains("paper_id"), ConfigError);

    for (Role r : kAllRoles) {
        std::map<std::string, std::string> vars;
        for (const auto& name : builtin_template(r).placeholders()) vars[name] = "<" + name + ">";
        const auto rendered = render_prompt(builtin_template(r), vars);
        CHECK(rendered.user.find("{{") == std::string::npos);
    }

    const auto custom = parse_template("c", "---SYSTEM_PROMPT---\nhi {{a}}\n---USER_PROMPT---\n{{ a }} and {{b}}\n");
    CHECK(render_prompt(custom, {{"a", "1"}, {"b", "2"}}) == RenderedPrompt{"hi 1\n", "1 and 2\n"});
    CHECK_THROWS_AS(parse_template("c", "no sections"), ConfigError);
}

TEST_CASE("golden summarizer prompt") {
    const auto vars = Json::parse(slurp(fixture("agent/vars.json"))).get<std::map<std::string, std::string>>();
    const auto p = render_prompt(builtin_template(Role::summarizer), vars);
    CHECK(p.system + "\n=====\n" + p.user == slurp(fixture("agent/summarizer.golden")));
}

TEST_CASE("golden responses parse for every role") {
    for (Role r : kAllRoles) {
        CAPTURE(to_string(r));
        CHECK_NOTHROW(parse_response(r, golden(std::string(template_name(r)))));
    }
    CHECK_NOTHROW(parse_response(kOrchestratorTemplate, golden("orchestrator")));
    const auto fenced = parse_response(Role::reviewer, slurp(fixture("agent/golden/reviewer_fenced.txt")));
    CHECK(fenced == Json::parse(golden("reviewer")));
}

TEST_CASE("mutated responses fail with the expected class") {
    const auto manifest = Json::parse(slurp(fixture("agent/mutated/manifest.json")));
    REQUIRE(manifest.size() == 16);
    std::set<std::string> roles;
    for (const auto& [file, want] : manifest.items()) {
        CAPTURE(file);
        const auto name = want["template"].get<std::string>();
        roles.insert(name);
        try {
            parse_response(name, slurp(fixture("agent/mutated/" + file)));
            FAIL("accepted a mutated response");
        } catch (const ResponseError& e) {
            CHECK(to_string(e.error_class()) == want["class"].get<std::string>());
        }
    }
    CHECK(roles.size() == 8);
}

TEST_CASE("reviewer semantics") {
    auto doc = [](std::vector<std::pair<std::string, int>> ranks) {
        Json ranking = Json::array();
        for (auto& [id, r] : ranks) ranking.push_back({{"paper_id", id}, {"rank", r}});
        return Json({{"ranking", ranking}}).dump();
    };
    const auto ok = parse_response(Role::reviewer, doc({{"A", 1}, {"B", 2}, {"C", 3}}));
    const auto ballot = ballot_from_response(ok, "r0");
    CHECK(ballot.ranks == std::map<std::string, int>{{"A", 1}, {"B", 2}, {"C", 3}});
    CHECK_NOTHROW(ssgp::check_permutation(ballot));

    for (const auto& bad : {doc({{"A", 1}, {"B", 1}, {"C", 3}}), doc({{"A", 1}, {"B", 3}}), doc({{"A", 1}, {"A", 2}})}) {
        try {
            parse_response(Role::reviewer, bad);
            FAIL("accepted a non-permutation");
        } catch (const ResponseError& e) {
            CHECK(e.error_class() == ErrorClass::semantic_violation);
        }
    }

    ParseContext ctx;
    ctx.candidate_ids = std::vector<std::string>{"A", "B", "D"};
    CHECK_THROWS_AS(parse_response(Role::reviewer, doc({{"A", 1}, {"B", 2}, {"C", 3}}), ctx), ResponseError);
    CHECK(parse_response(Role::reviewer, doc({})).at("ranking").empty());
}

TEST_CASE("random accepted reviewer responses compose with the ballot invariant") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = static_cast<int>(rng() % 8);
        std::vector<int> ranks(n);
        for (int i = 0; i < n; ++i) ranks[i] = 1 + static_cast<int>(rng() % (n + 1));  // may repeat or overshoot
        Json ranking = Json::array();
        for (int i = 0; i < n; ++i) ranking.push_back({{"paper_id", "c" + std::to_string(i)}, {"rank", ranks[i]}});
        Json parsed;
        try {
            parsed = parse_response(Role::reviewer, Json({{"ranking", ranking}}).dump());
        } catch (const ResponseError&) {
            continue;
        }
        CHECK_NOTHROW(ssgp::check_permutation(ballot_from_response(parsed, "r")));
    }
}

TEST_CASE("typed views keep fields one to one") {
    const auto counts = Json::parse(slurp(fixture("agent/golden/inductor.counts.json")));
    const auto doc = parse_response(Role::inductor, golden("inductor"));
    const auto entries = entries_from_response(doc);
    REQUIRE(entries.size() == counts["entries"].get<std::size_t>());
    CHECK(entries[0].pattern == "embedding scale");
    CHECK(entries[0].action == "scale embeddings by 1/sqrt(dim)");
    CHECK(entries[0].count == 2);
    CHECK(entries[0].total == 3);
    CHECK(entries[0].confidence == induction::Confidence::medium);
    CHECK(entries[0].evidence == std::vector<std::string>{"N1", "N2"});
    CHECK(entries[1].scope == "all");
    CHECK(entries[2].rationale.empty());
    CHECK(entries[2].confidence == induction::Confidence::low);

    const auto apis = api_units_from_response(parse_response(Role::encapsulator, golden("encapsulator")), "N1");
    REQUIRE(apis.size() == 2);
    CHECK(apis[0].kind == UnitKind::reuse);
    CHECK(apis[1].kind == UnitKind::new_unit);
    CHECK(apis[0].dependencies == std::vector<std::string>{"math"});

    const auto pkg = injection_from_response(parse_response(Role::injector, golden("injector")));
    CHECK(pkg.selected_patterns == std::vector<std::string>{"embedding scale"});
    CHECK(pkg.rejected_patterns == std::vector<std::string>{"eval protocol"});

    const auto plan = refine::plan_from_json(parse_response(Role::repro_agent, golden("repro_agent")));
    REQUIRE(plan.edits.size() == 1);
    CHECK(plan.edits[0].change_type == refine::ChangeType::modify);

    FileTree current{{"units/loss.py", "margin = 1.0\n"}};
    const auto orch = plan_from_orchestrator(parse_response(kOrchestratorTemplate, golden("orchestrator")), &current);
    REQUIRE(orch.edits.size() == 1);
    CHECK(refine::apply_edits(current, orch.edits).at("units/loss.py") == "margin = 0.5\n");
}

TEST_CASE("schema subset") {
    const auto schema = Json::parse(R"({"type":"object","required":["a"],"additionalProperties":false,
        "properties":{"a":{"type":"integer","minimum":1,"maximum":3},"b":{"type":"string","pattern":"^x+$"},
        "c":{"anyOf":[{"type":"number"},{"type":"string","enum":["unknown"]}]},"d":{"type":"array","minItems":1,
        "items":{"type":"string","minLength":2}}}})");
    CHECK_FALSE(validate_schema(schema, Json::parse(R"({"a":2,"b":"xx","c":"unknown","d":["ab"]})")));
    CHECK(validate_schema(schema, Json::parse(R"({"b":"x"})"))->find("a") != std::string::npos);
    CHECK(validate_schema(schema, Json::parse(R"({"a":1.5})")));
    CHECK(validate_schema(schema, Json::parse(R"({"a":4})")));
    CHECK(validate_schema(schema, Json::parse(R"({"a":1,"b":"y"})")));
    CHECK(validate_schema(schema, Json::parse(R"({"a":1,"c":"maybe"})")));
    CHECK(validate_schema(schema, Json::parse(R"({"a":1,"d":[]})")));
    CHECK(validate_schema(schema, Json::parse(R"({"a":1,"d":["a"]})"))->rfind("/d/0", 0) == 0);
    CHECK(validate_schema(schema, Json::parse(R"({"a":1,"e":0})")));
    CHECK(validate_schema(schema, Json::parse("[]")));
}

TEST_CASE("retry policy") {
    const auto good = golden("reviewer");
    {
        Canned b({good});
        auto r = call_with_retry(b, request(Role::reviewer));
        CHECK(r.value.has_value());
        CHECK(r.transcript.retries == 0);
        CHECK(r.transcript.outcome == ParseOutcome::ok);
    }
    {
        Canned b({"{not json", good});
        auto r = call_with_retry(b, request(Role::reviewer));
        CHECK(r.transcript.retries == 1);
        CHECK(r.transcript.outcome == ParseOutcome::repaired);
        REQUIRE(b.seen.size() == 2);
        CHECK(b.seen[1].prompt.user.find("malformed_json") != std::string::npos);
        CHECK(b.seen[1].payload.contains("previous_error"));
        CHECK(r.transcript.request.user == "user");
    }
    {
        Canned b({"{}"});
        auto r = call_with_retry(b, request(Role::reviewer), 2);
        CHECK_FALSE(r.value.has_value());
        CHECK(b.seen.size() == 3);
        CHECK(r.transcript.outcome == ParseOutcome::failed);
        CHECK(r.transcript.errors.size() == 3);
        CHECK(r.transcript.responses.size() == 3);
    }
    {
        Canned b({"<transport>"});
        TranscriptLog log;
        CHECK_THROWS_AS(call_with_retry(b, request(Role::reviewer), 2, &log), TransportError);
        CHECK(b.seen.size() == 1);
        REQUIRE(log.entries().size() == 1);
        CHECK(log.entries()[0].errors[0].rfind("transport", 0) == 0);
    }
    {
        Canned b({"{}"});
        AgentClient client(b, nullptr, 1);
        CHECK_THROWS_AS(client.call(Role::reviewer, {{"target_summary", "t"}, {"candidate_summaries", "c"}}, {}),
                        AgentCallFailed);
        CHECK(b.seen.size() == 2);
    }
}

TEST_CASE("transcripts persist and replay") {
    TempDir dir("tx");
    const auto path = dir / "transcripts.jsonl";
    {
        TranscriptLog log(path);
        Canned b({"```json\n" + golden("injector") + "```", "{}", golden("inductor")});
        call_with_retry(b, request(Role::injector), 0, &log);
        call_with_retry(b, request(Role::inductor), 2, &log);
    }
    const auto back = read_transcripts(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].outcome == ParseOutcome::ok);
    CHECK(back[1].outcome == ParseOutcome::repaired);
    CHECK(back[1].retries == 1);
    for (const auto& t : back) {
        CHECK(transcript_from_json(to_json(t)) == t);
        if (t.outcome == ParseOutcome::failed) continue;
        CHECK(parse_response(t.template_name, t.responses.back()) == t.validated);
    }
}

TEST_CASE("bounded backend caps concurrency") {
    class Slow : public Backend {
    public:
        std::string complete(const AgentRequest&) override {
            const int now = ++active;
            int seen = peak.load();
            while (now > seen && !peak.compare_exchange_weak(seen, now)) {}
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
            --active;
            return "{}";
        }
        std::string model_id() const override { return "slow"; }
        std::atomic<int> active{0}, peak{0};
    } slow;
    BoundedBackend bounded(slow, 2);
    std::vector<std::jthread> threads;
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&] {
            for (int k = 0; k < 3; ++k) bounded.complete(request(Role::summarizer));
        });
    threads.clear();
    CHECK(slow.peak.load() <= 2);
    CHECK(slow.peak.load() >= 1);
}

TEST_CASE("mock reviewer ranks by summary token overlap") {
    MockBackend mock(1, MockProfile{});
    AgentClient client(mock);
    const Json target = summary_with("graph encoder with margin loss over item features");
    // B shares graph, encoder, margin, loss, item (5); C shares graph, features (2)
    const std::vector<Candidate> cands{{"C", summary_with("graph features")},
                                       {"B", summary_with("graph encoder margin loss item")},
                                       {"A", summary_with("tokenizer")}};
    const auto tokens = summary_tokens(target);
    CHECK(tokens.count("graph"));
    CHECK_FALSE(tokens.count("method_summary"));
    const auto ballots = collect_ballots(client, target, cands, 3, 9);
    REQUIRE(ballots.size() == 3);
    for (const auto& b : ballots) {
        CHECK(b.ranks.at("B") == 1);
        CHECK(b.ranks.at("C") == 2);
        CHECK(b.ranks.at("A") == 3);
    }
    CHECK(collect_ballots(client, target, {}, 1, 9).at(0).ranks.empty());
}

TEST_CASE("mock responses are byte-deterministic") {
    MockProfile profile;
    profile.reviewer_noise = 0.7;
    MockBackend a(5, profile), b(5, profile), c(6, profile);
    AgentRequest req = request(Role::reviewer);
    req.payload = {{"reviewer", 1},
                   {"target_summary", summary_with("alpha beta gamma")},
                   {"candidates", Json::array({{{"paper_id", "P1"}, {"summary", summary_with("alpha")}},
                                               {{"paper_id", "P2"}, {"summary", summary_with("beta gamma")}},
                                               {{"paper_id", "P3"}, {"summary", summary_with("delta")}}})}};
    CHECK(a.complete(req) == b.complete(req));
    CHECK(a.complete(req) == a.complete(req));
    CHECK_NOTHROW(parse_response(Role::reviewer, c.complete(req)));
}

TEST_CASE("mock profile scripts") {
    const auto profile = load_profile(fixture("e2e/profile.json"));
    MockBackend mock(1, profile);
    AgentRequest rel = request(Role::relation_analyzer);
    rel.payload = {{"target_id", "T"}, {"neighbor_id", "N1"}};
    const auto doc = parse_response(Role::relation_analyzer, mock.complete(rel));
    CHECK(doc["reusable_units"][0]["unit_name"] == "encoder");

    rel.payload["neighbor_id"] = "N9";  // falls through to the "*|*" script
    CHECK(parse_response(Role::relation_analyzer, mock.complete(rel))["reusable_units"].empty());

    MockBackend bare(1, MockProfile{});
    CHECK_THROWS_AS(bare.complete(rel), ConfigError);
    CHECK_THROWS_AS(profile_from_json({{"repair", {{"mode", "psychic"}}}}), Error);
}
