#pragma once
// Bridges from agent calls to the engine's module interfaces.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "reprograph/agent/backend.hpp"
#include "reprograph/graph.hpp"
#include "reprograph/knowledge.hpp"
#include "reprograph/refine.hpp"
#include "reprograph/relation.hpp"
#include "reprograph/ssgp.hpp"

namespace reprograph::agent {

Json summarize_paper(AgentClient& client, const PaperNode& paper);

struct Candidate {
    std::string id;
    Json summary;
};

// One ballot per reviewer, each seeing the candidates in its own shuffled order.
std::vector<ssgp::RankingBallot> collect_ballots(AgentClient& client, const Json& target_summary,
                                                 const std::vector<Candidate>& candidates, int reviewers,
                                                 std::uint64_t seed);

// Files with their top-level def/class names, one per line.
std::string code_index(const FileTree& tree);

relation::RelationAnnotation analyze_relation(AgentClient& client, const PaperNode& target, const PaperNode& neighbor,
                                              const FileTree& neighbor_code);

class AgentTransformer : public relation::Transformer {
public:
    explicit AgentTransformer(AgentClient& client) : client_(client) {}
    std::string adapt(const relation::AdaptRequest& req) override;

private:
    AgentClient& client_;
};

// Advisory second opinion on the deterministic selection; never overrides it.
Json advise_aggregation(AgentClient& client, const relation::CandidateMap& candidates,
                        const ssgp::WeightedNeighborhood& neighborhood, double beta,
                        const relation::AggregationResult& computed);

// Repair mode by default; with injected context the orchestration template in
// iterative_repair mode.
class AgentRepairAgent : public refine::RepairAgent {
public:
    explicit AgentRepairAgent(AgentClient& client) : client_(client) {}
    std::optional<refine::RepairPlan> propose(const refine::RepairRequest& req) override;

private:
    AgentClient& client_;
};

class AgentInductor : public induction::Inductor {
public:
    AgentInductor(AgentClient& client, std::string task_name, std::string domain = "unknown")
        : client_(client), task_(std::move(task_name)), domain_(std::move(domain)) {}
    std::vector<induction::KnowledgeEntry> induce(const induction::InductionRequest& req) override;

private:
    AgentClient& client_;
    std::string task_;
    std::string domain_;
};

InjectionPackage inject_knowledge(AgentClient& client, const std::string& target_id, const Json& target_summary,
                                  const Implementation& current, const std::vector<induction::KnowledgeEntry>& entries);

} // namespace reprograph::agent
