#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "reprograph/error.hpp"
#include "reprograph/knowledge.hpp"
#include "reprograph/louvain.hpp"
#include "support.hpp"

using namespace reprograph;
using namespace reprograph::induction;
using testing_support::TempDir;

namespace {

KnowledgeEntry entry(const std::string& pattern, int count, int total = 5, const std::string& action = "") {
    KnowledgeEntry e;
    e.pattern = pattern;
    e.trigger = "when " + pattern + " shows up";
    e.action = action.empty() ? "fix " + pattern : action;
    e.count = count;
    e.total = total;
    e.confidence = Confidence::medium;
    e.evidence = {"P1"};
    return e;
}

class FixedInductor : public Inductor {
public:
    explicit FixedInductor(std::vector<KnowledgeEntry> out) : out_(std::move(out)) {}
    std::vector<KnowledgeEntry> induce(const InductionRequest& req) override {
        calls.push_back(req);
        return out_;
    }
    std::vector<InductionRequest> calls;

private:
    std::vector<KnowledgeEntry> out_;
};

class BrokenInductor : public Inductor {
public:
    std::vector<KnowledgeEntry> induce(const InductionRequest&) override { throw ParseError("not json", 1); }
};

std::vector<Outcome> outcomes_for(const std::vector<std::string>& ids) {
    std::vector<Outcome> out;
    for (const auto& id : ids) out.push_back({id, {}, {}, 12.5});
    return out;
}

TaskGraph planted() {
    TaskGraph g("planted", {"a1", "a2", "a3", "b1", "b2", "b3"});
    for (const auto* block : {"a", "b"})
        for (int i = 1; i <= 3; ++i)
            for (int j = i + 1; j <= 3; ++j)
                g.set_weight(block + std::to_string(i), block + std::to_string(j), 1.0);
    g.set_weight("a3", "b1", 0.05);
    return g;
}

ssgp::WeightedNeighborhood neighborhood(std::vector<std::pair<std::string, double>> members) {
    ssgp::WeightedNeighborhood n;
    n.target_id = "T";
    for (auto& [id, w] : members) n.members.push_back({id, 0.0, w});
    return n;
}

} // namespace

TEST_CASE("symmetrize by hand") {
    auto w = symmetrize({{{"a", "b"}, 0.6}, {{"b", "a"}, 0.2}, {{"a", "c"}, 0.5}});
    CHECK(w.at({"a", "b"}) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(w.at({"a", "c"}) == 0.25);
    CHECK(w.size() == 2);

    const std::map<std::pair<std::string, std::string>, double> sym{{{"a", "b"}, 0.3}, {{"b", "a"}, 0.3}};
    CHECK(symmetrize(sym).at({"a", "b"}) == 0.3);
    CHECK_THROWS_AS(symmetrize({{{"a", "b"}, -0.1}}), ValidationError);

    const auto g = TaskGraph::from_directed("t", {"a", "b", "c"}, {{{"a", "b"}, 0.6}, {{"b", "a"}, 0.2}});
    CHECK(g.weight("a", "b") == g.weight("b", "a"));
    CHECK(g.weight("a", "c") == 0.0);
    CHECK_THROWS_AS(TaskGraph("t", {"a"}).set_weight("a", "z", 1.0), ValidationError);
    CHECK(task_graph_from_json(to_json(g)).weights() == g.weights());
}

TEST_CASE("modularity oracle enumerates every partition") {
    std::size_t visited = 0;
    const auto [parts, q] = oracles::best_partition(planted(), &visited);
    CHECK(visited == 203);  // Bell(6)
    CHECK(parts == std::vector<std::vector<std::string>>{{"a1", "a2", "a3"}, {"b1", "b2", "b3"}});
    CHECK(q > 0.45);
}

TEST_CASE("louvain recovers the planted blocks") {
    const auto g = planted();
    const auto p = louvain_partition(g, 0);
    CHECK(p.subgraphs == oracles::best_partition(g).first);
    CHECK(p.modularity == doctest::Approx(oracles::best_partition(g).second).epsilon(1e-12));
    CHECK(p.modularity == doctest::Approx(modularity(g, p.subgraphs)).epsilon(1e-12));
    CHECK(p.index_of("b2") == 1);
    CHECK(p.index_of("zz") == -1);
    CHECK(partition_from_json(to_json(p)) == p);
}

TEST_CASE("degenerate task graphs") {
    const auto single = louvain_partition(TaskGraph("t", {"x"}), 3);
    CHECK(single.subgraphs == std::vector<std::vector<std::string>>{{"x"}});

    TaskGraph empty("t", {"c", "a", "b"});
    const auto p = louvain_partition(empty, 3);
    CHECK(p.subgraphs == std::vector<std::vector<std::string>>{{"a"}, {"b"}, {"c"}});
    CHECK(p.modularity == 0.0);
    CHECK_THROWS_AS(louvain_partition(TaskGraph("t", {}), 0), ValidationError);
}

TEST_CASE("louvain properties on random weighted graphs") {
    std::mt19937_64 rng(20240611);
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = oracles::random_task_graph(rng, 200);
        const auto p = louvain_partition(g, static_cast<std::uint64_t>(trial));
        CAPTURE(trial);
        CHECK(oracles::is_exact_partition(p, g.members()));
        std::vector<std::vector<std::string>> singletons;
        for (const auto& id : g.members()) singletons.push_back({id});
        CHECK(p.modularity >= oracles::dense_modularity(g, singletons) - 1e-12);
        CHECK(p.modularity == doctest::Approx(oracles::dense_modularity(g, p.subgraphs)).epsilon(1e-9));
    }
}

TEST_CASE("louvain never beats the exhaustive optimum on small graphs") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        const auto g = oracles::random_task_graph(rng, 7);
        const auto p = louvain_partition(g, 1);
        CHECK(p.modularity <= oracles::best_partition(g).second + 1e-12);
    }
}

TEST_CASE("louvain is deterministic under a fixed seed") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = oracles::random_task_graph(rng, 80);
        const auto first = louvain_partition(g, 42);
        for (int run = 0; run < 4; ++run) CHECK(louvain_partition(g, 42) == first);
    }
}

TEST_CASE("eta follows the floor with a floor of one") {
    for (std::size_t n = 1; n <= 10; ++n) CHECK(eta_for(n) == std::max<int>(1, static_cast<int>(n / 2)));
    CHECK(eta_for(7) == 3);
    CHECK(eta_for(10, 0.3) == 3);
    CHECK_THROWS_AS(eta_for(4, 0.0), ConfigError);
    CHECK_THROWS_AS(eta_for(4, 1.5), ConfigError);
}

TEST_CASE("gating keeps frequent entries with positive validation gain") {
    FixedInductor inductor({entry("big", 4), entry("small", 3), entry("flat", 3), entry("worse", 5), entry("rare", 2)});
    ScriptedValidation validation({{"big", {5.0, 5.0}},
                                   {"small", {0.5, 0.5}},
                                   {"flat", {0.0, 0.0}},
                                   {"worse", {-2.0, -2.0}},
                                   {"rare", {50.0, 50.0}}});
    const std::vector<std::string> members{"P3", "P1", "P2", "P4", "P5", "P6", "P7"};
    const int eta = eta_for(members.size());
    REQUIRE(eta == 3);
    const auto kb = induce_knowledge(0, 1, members, outcomes_for(members), inductor, validation, {eta, 2});

    REQUIRE(kb.entries.size() == 2);
    CHECK(kb.entries[0].pattern == "big");
    CHECK(*kb.entries[0].validation_gain == 5.0);
    CHECK(kb.entries[1].pattern == "small");
    CHECK(kb.gated());
    REQUIRE(kb.dropped.size() == 3);
    CHECK(kb.dropped[0].reason == "no validation gain");
    CHECK(kb.dropped[1].reason == "no validation gain");
    CHECK(kb.dropped[2].reason == "frequency 2 below eta 3");
    CHECK(kb.members.front() == "P1");
    CHECK(inductor.calls.at(0).eta == 3);
    for (const auto& e : kb.entries) CHECK(e.category == KnowledgeCategory::collective);
}

TEST_CASE("gating needs enough validation runs and valid entries") {
    auto bad = entry("bad", 6, 5);
    auto dup = entry("big", 4);
    FixedInductor inductor({entry("big", 4), dup, entry("lonely", 4), bad});
    ScriptedValidation validation({{"big", {1.0, 2.0}}, {"lonely", {9.0}}});
    const auto kb = induce_knowledge(2, 0, {"A", "B"}, outcomes_for({"A"}), inductor, validation, {1, 2});
    REQUIRE(kb.entries.size() == 1);
    CHECK(*kb.entries[0].validation_gain == 1.5);
    REQUIRE(kb.dropped.size() == 3);
    CHECK(kb.dropped[0].reason == "duplicate of an earlier entry");
    CHECK(kb.dropped[1].reason == "only 1 validation runs, need 2");
    CHECK(kb.dropped[2].reason.rfind("invalid", 0) == 0);

    BrokenInductor broken;
    const auto failed = induce_knowledge(2, 0, {"A"}, outcomes_for({"A"}), broken, validation, {1, 2});
    CHECK(failed.failed);
    CHECK(failed.entries.empty());
    CHECK_THROWS_AS(induce_knowledge(2, 0, {"A"}, {}, broken, validation, {1, 2}), ValidationError);
}

TEST_CASE("persisted bases re-check their gating") {
    TempDir dir("kb");
    FixedInductor inductor({entry("big", 4)});
    ScriptedValidation validation({{"big", {1.0, 2.0}}});
    const auto kb = induce_knowledge(1, 2, {"A", "B"}, outcomes_for({"A", "B"}), inductor, validation, {1, 2});
    save_knowledge_base(kb, dir / "epoch_2/subgraph_1.json");
    const auto back = load_knowledge_base(dir / "epoch_2/subgraph_1.json");
    CHECK(back == kb);
    CHECK(back.gated());

    auto tampered = to_json(kb);
    tampered["entries"][0]["provenance"]["validation_gain"] = -1.0;
    CHECK_FALSE(knowledge_base_from_json(tampered).gated());
    tampered = to_json(kb);
    tampered["eta"] = 9;
    CHECK_FALSE(knowledge_base_from_json(tampered).gated());
}

TEST_CASE("entries follow the induction schema") {
    auto e = entry("embedding scale", 2, 3, "scale embeddings by 1/sqrt(dim)");
    e.validation_gain = 0.75;
    const auto j = to_json(e);
    for (const auto* key : {"pattern", "trigger", "action", "rationale", "verification", "scope", "frequency",
                            "confidence", "evidence"})
        CHECK(j.contains(key));
    CHECK(j["frequency"] == "2/3");
    CHECK(j["provenance"]["frequency"] == Json({{"count", 2}, {"total", 3}}));
    CHECK(entry_from_json(j) == e);
    CHECK(parse_frequency("3/5") == std::pair{3, 5});
    CHECK_THROWS_AS(parse_frequency("three"), ValidationError);
}

TEST_CASE("affinity by hand") {
    SubgraphPartition p;
    p.subgraphs = {{"u1", "u2"}, {"u3"}, {"u9"}};
    const auto a = subgraph_affinity(neighborhood({{"u1", 0.5}, {"u2", 0.3}, {"u3", 0.2}}), p);
    CHECK(a.per_subgraph[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(a.per_subgraph[1] == 0.2);
    CHECK(a.per_subgraph[2] == 0.0);
    CHECK(a.unassigned == 0.0);

    const auto outside = subgraph_affinity(neighborhood({{"u1", 0.6}, {"x", 0.4}}), p);
    CHECK(outside.unassigned == 0.4);
    CHECK(outside.unassigned_ids == std::vector<std::string>{"x"});
}

TEST_CASE("affinity conservation with normalized weights") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> size(1, 20), bucket(0, 4);
    std::uniform_real_distribution<double> score(1.0, 6.0);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = size(rng);
        std::vector<ssgp::RankAggregate> sel;
        SubgraphPartition p;
        p.subgraphs.resize(4);
        for (int i = 0; i < n; ++i) {
            ssgp::RankAggregate a;
            a.candidate_id = "c" + std::to_string(i);
            a.composite_score = score(rng);
            sel.push_back(a);
            const int b = bucket(rng);
            if (b < 4) p.subgraphs[static_cast<std::size_t>(b)].push_back(a.candidate_id);  // bucket 4: unassigned
        }
        for (auto& sg : p.subgraphs) std::sort(sg.begin(), sg.end());
        const auto a = subgraph_affinity(ssgp::edge_weights("T", sel), p);
        double total = a.unassigned;
        for (double s : a.per_subgraph) total += s;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("retrieval by hand") {
    std::map<int, KnowledgeBase> bases;
    bases[0].entries = {entry("a", 1), entry("b", 1)};
    bases[1].entries = {entry("b", 1), entry("c", 1)};
    Affinity aff;
    aff.per_subgraph = {0.8, 0.2};

    auto r = retrieve_knowledge(aff, bases, 1);
    CHECK(r.subgraphs == std::vector<int>{0});
    REQUIRE(r.entries.size() == 2);
    CHECK(*r.entries[0].source_subgraph == 0);

    r = retrieve_knowledge(aff, bases, 5);
    CHECK(r.subgraphs == std::vector<int>{0, 1});
    REQUIRE(r.entries.size() == 3);
    CHECK(r.entries[2].pattern == "c");
    CHECK(*r.entries[2].source_subgraph == 1);

    aff.per_subgraph = {0.5, 0.5};
    CHECK(retrieve_knowledge(aff, bases, 1).subgraphs == std::vector<int>{0});

    const auto none = retrieve_knowledge(aff, {}, 3);
    CHECK(none.entries.empty());
    CHECK(none.warnings == std::vector<std::string>{"no knowledge bases available"});
    CHECK_THROWS_AS(retrieve_knowledge(aff, bases, 0), ConfigError);
    CHECK(kDefaultTopK == 3);
}

TEST_CASE("retrieval equals the brute-force top-k union") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> n_sub(1, 8), n_entries(0, 4), kdist(1, 5), small(0, 5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = n_sub(rng);
        Affinity aff;
        std::map<int, KnowledgeBase> bases;
        for (int j = 0; j < n; ++j) {
            aff.per_subgraph.push_back(trial % 2 ? 0.125 * small(rng) : unif(rng));
            if (small(rng) == 0) continue;  // subgraph without a base
            auto& kb = bases[j];
            kb.subgraph_id = j;
            for (int e = n_entries(rng); e > 0; --e)
                kb.entries.push_back(entry("p" + std::to_string(small(rng)), 1, 1, "a" + std::to_string(small(rng) % 2)));
        }
        if (bases.empty()) bases[0].entries = {entry("p0", 1)};
        const int k = kdist(rng);
        const auto r = retrieve_knowledge(aff, bases, k);
        const auto order = oracles::top_k_subgraphs(aff.per_subgraph, k);
        CAPTURE(trial);
        CHECK(r.subgraphs == order);
        std::vector<std::tuple<std::string, std::string, int>> got;
        for (const auto& e : r.entries) got.emplace_back(e.pattern, e.action, *e.source_subgraph);
        CHECK(got == oracles::union_entries(order, bases));
    }
}

TEST_CASE("best epoch minimizes validation gap, earliest on ties") {
    CHECK(select_best_epoch({{0, 30.0}, {1, 20.0}, {2, 25.0}}) == 1);
    CHECK(select_best_epoch({{0, 30.0}, {1, 22.0}, {2, 18.0}}) == 2);
    CHECK(select_best_epoch({{0, 10.0}, {1, 10.0}}) == 0);
    CHECK_THROWS_AS(select_best_epoch({}), ValidationError);
}

TEST_CASE("checkpoint manifest round-trips") {
    CheckpointManifest m;
    m.records = {{0, 0, "epoch_0/subgraph_0.json", 12.5}, {1, 0, "epoch_1/subgraph_0.json", 7.25}};
    m.epoch_val_gap = {{0, 12.5}, {1, 7.25}};
    m.best_epoch = 1;
    m.partition = louvain_partition(planted(), 0);
    m.warnings = {"note"};
    CHECK(checkpoint_from_json(Json::parse(to_json(m).dump())) == m);
}
