#pragma once
// Deterministic offline agents driven by a behavior profile.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "reprograph/agent/backend.hpp"
#include "reprograph/implementation.hpp"

namespace reprograph::agent {

enum class RepairMode { noop, scripted, oracle };

// Profile document:
//   reviewer_noise: stddev added to token-overlap scores (0 = pure overlap)
//   relations:  {"<target>|<neighbor>": relation-analysis response}
//   transforms: {"<neighbor>|<unit>": {"replace": [[from, to], ...]} | {"code": text}}
//   repair:     {"mode": "noop|scripted|oracle", "plans": {"<target>": [plan, ...]}}
//   induction:  {"<epoch>|<subgraph>": [entry, ...]}
// Keys may use "*" on either side as a wildcard; exact keys win.
struct MockProfile {
    double reviewer_noise = 0.0;
    Json relations = Json::object();
    Json transforms = Json::object();
    RepairMode repair_mode = RepairMode::noop;
    Json plans = Json::object();
    Json induction = Json::object();
    std::map<std::string, FileTree> oracle_trees;  // target -> official tree, oracle mode only
};

MockProfile profile_from_json(const Json& j);
MockProfile load_profile(const std::filesystem::path& path);

// Lowercase alphanumeric token set over every string value (keys and "unknown" excluded).
std::set<std::string> summary_tokens(const Json& summary);

class MockBackend : public Backend {
public:
    MockBackend(std::uint64_t seed, MockProfile profile) : seed_(seed), profile_(std::move(profile)) {}

    std::string complete(const AgentRequest& req) override;
    std::string model_id() const override { return "mock"; }
    bool deterministic() const override { return true; }

    MockProfile& profile() noexcept { return profile_; }

private:
    Json summarize(const Json& p) const;
    Json review(const Json& p) const;
    Json relate(const Json& p) const;
    Json encapsulate(const Json& p) const;
    Json advise(const Json& p) const;
    Json repair(const Json& p, bool orchestrator) const;
    Json induce(const Json& p) const;
    Json inject(const Json& p) const;

    std::uint64_t seed_;
    MockProfile profile_;
};

} // namespace reprograph::agent
