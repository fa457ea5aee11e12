#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "reprograph/pipeline.hpp"
#include "support.hpp"

using testing_support::fixture;
using testing_support::slurp;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

Run cli(const TempDir& dir, const std::vector<std::string>& args) {
    std::string cmd = quote(CLI_PATH);
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " > " + quote((dir / "stdout").string()) + " 2> " + quote((dir / "stderr").string());
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "stdout");
    r.err = slurp(dir / "stderr");
    return r;
}

std::vector<std::string> e2e_flags(const fs::path& out, const std::string& target = "T") {
    return {"--graph", fixture("e2e/graph.jsonl").string(), "--target", target, "--out", out.string(),
            "--mock-profile", fixture("e2e/profile.json").string(), "--mock-oracle", "--seed", "7"};
}

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

} // namespace

TEST_CASE("prune and aggregate print their documents") {
    TempDir dir("cli");
    auto r = cli(dir, with(e2e_flags(dir / "run"), {"prune"}));
    REQUIRE(r.code == 0);
    const auto hood = nlohmann::json::parse(r.out);
    CHECK(hood["target_id"] == "T");
    CHECK(hood["members"].size() == 3);

    r = cli(dir, with(e2e_flags(dir / "run"), {"aggregate"}));
    REQUIRE(r.code == 0);
    const auto agg = nlohmann::json::parse(r.out);
    CHECK(agg.contains("selected"));
    CHECK(agg.contains("deferred"));
}

TEST_CASE("reproduce, report and verify") {
    TempDir dir("cli");
    const auto out = dir / "run";
    auto r = cli(dir, with(e2e_flags(out), {"reproduce"}));
    REQUIRE(r.code == 0);
    const auto report = reprograph::pipeline::run_report_from_json(nlohmann::json::parse(r.out));
    REQUIRE(report.targets.size() == 1);
    CHECK(report.targets[0].final_gap == 0.0);
    CHECK(fs::exists(out / "report.json"));

    r = cli(dir, {"--out", out.string(), "report", "--verify"});
    CHECK(r.code == 0);
    CHECK(r.out.find("T  initial") != std::string::npos);
    CHECK(r.out.find("verified") != std::string::npos);

    // a tampered metric file no longer matches the recorded gap
    {
        auto fb = nlohmann::json::parse(slurp(out / "T/metrics/final.json"));
        fb["metrics"]["ndcg"] = 0.1;
        std::ofstream(out / "T/metrics/final.json") << fb.dump(2);
    }
    r = cli(dir, {"--out", out.string(), "report", "--verify"});
    CHECK(r.code == 4);
    CHECK(r.err.find("mismatch") != std::string::npos);
}

TEST_CASE("config file with flag overrides") {
    TempDir dir("cli");
    {
        std::ofstream cfg(dir / "run.toml");
        cfg << "graph = \"" << fixture("e2e/graph.jsonl").string() << "\"\n"
            << "target = [\"T\"]\n"
            << "mock-profile = \"" << fixture("e2e/profile.json").string() << "\"\n"
            << "seed = 7\n"
            << "k-keep = 1\n";
    }
    auto r = cli(dir, {"--config", (dir / "run.toml").string(), "--out", (dir / "a").string(), "prune"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["members"].size() == 1);

    r = cli(dir, {"--config", (dir / "run.toml").string(), "--out", (dir / "b").string(), "--k-keep", "2", "prune"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["members"].size() == 2);
    CHECK(nlohmann::json::parse(slurp(dir / "b/run_config.json"))["k_keep"] == 2);
}

TEST_CASE("exit codes") {
    TempDir dir("cli");
    const auto out = dir / "run";

    CHECK(cli(dir, {"--help"}).code == 0);
    CHECK(cli(dir, {}).code == 2);
    CHECK(cli(dir, {"--no-such-flag", "prune"}).code == 2);
    CHECK(cli(dir, with(e2e_flags(out), {"--backend", "carrier-pigeon", "prune"})).code == 2);

    auto r = cli(dir, {"--graph", (dir / "missing.jsonl").string(), "--target", "T", "--seed", "1", "prune"});
    CHECK(r.code == 2);
    CHECK(r.err.find("config error") != std::string::npos);

    r = cli(dir, {"--graph", fixture("e2e/graph.jsonl").string(), "--target", "T", "--out", out.string(),
                  "--mock-profile", fixture("e2e/profile.json").string(), "prune"});
    CHECK(r.code == 2);  // the mock backend needs a seed

    r = cli(dir, with(e2e_flags(out), {"--fail-before-stage", "relation", "reproduce"}));
    CHECK(r.code == 3);
    CHECK(r.err.find("relation") != std::string::npos);

    r = cli(dir, with(e2e_flags(dir / "other", "NOPE"), {"prune"}));
    CHECK(r.code == 4);
    CHECK(cli(dir, with(e2e_flags(dir / "two"), {"--target", "N1", "prune"})).code == 2);

    {
        std::ofstream bad(dir / "bad.jsonl");
        bad << "{\"type\": \"node\", \"id\": \n";
    }
    r = cli(dir, {"--graph", (dir / "bad.jsonl").string(), "--target", "T", "--seed", "1", "--out",
                  (dir / "bad").string(), "prune"});
    CHECK(r.code == 4);

    CHECK(cli(dir, {"--out", (dir / "empty").string(), "report"}).code == 2);
}

TEST_CASE("simulate-bounds writes the sweep as csv") {
    TempDir dir("cli");
    const auto csv = dir / "bounds.csv";
    auto r = cli(dir, {"simulate-bounds", "--family", "sub_gaussian", "--trials", "2000", "--lambdas", "1", "2",
                       "--ks", "1", "5", "--csv", csv.string()});
    REQUIRE(r.code == 0);
    std::ifstream in(csv);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "family,lambda,K,trials,empirical,bound,stderr");

    r = cli(dir, {"simulate-bounds", "--trials", "500", "--lambdas", "1", "--ks", "1"});
    CHECK(r.code == 0);
    CHECK(r.out.find("bounded_variance") != std::string::npos);
    CHECK(cli(dir, {"simulate-bounds", "--family", "cauchy"}).code == 2);
}
