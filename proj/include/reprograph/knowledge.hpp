#pragma once
// Per-subgraph knowledge bases: induction with frequency and validation
// gating, affinity-based retrieval, and persisted checkpoints.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reprograph/feedback.hpp"
#include "reprograph/graph.hpp"
#include "reprograph/implementation.hpp"
#include "reprograph/louvain.hpp"
#include "reprograph/ssgp.hpp"

namespace reprograph::induction {

inline constexpr int kDefaultTopK = 3;
inline constexpr int kDefaultMinValRuns = 2;
inline constexpr int kDefaultEpochs = 3;

enum class Confidence { low, medium, high };

std::string_view to_string(Confidence c);
Confidence confidence_from_string(std::string_view s);

struct KnowledgeEntry {
    std::string pattern;
    std::string trigger;
    std::string action;
    std::string rationale;
    std::string verification;
    std::string scope;
    int count = 0;
    int total = 0;
    Confidence confidence = Confidence::low;
    std::vector<std::string> evidence;
    KnowledgeCategory category = KnowledgeCategory::collective;
    std::optional<double> validation_gain;  // set once gated
    std::optional<int> source_subgraph;     // set by retrieval

    // count <= total, action and evidence non-empty
    void validate() const;
    bool operator==(const KnowledgeEntry&) const = default;
};

// Induction-schema entry plus the provenance block.
Json to_json(const KnowledgeEntry& e);
KnowledgeEntry entry_from_json(const Json& j);
// "3/5" -> (3, 5)
std::pair<int, int> parse_frequency(const std::string& text);

struct DroppedEntry {
    KnowledgeEntry entry;
    std::string reason;

    bool operator==(const DroppedEntry&) const = default;
};

struct KnowledgeBase {
    int subgraph_id = 0;
    int epoch = 0;
    int eta = 1;
    std::vector<std::string> members;
    std::vector<KnowledgeEntry> entries;
    std::vector<DroppedEntry> dropped;
    bool failed = false;              // inductor could not produce valid output
    std::string failure;

    // Gating soundness re-checked from stored provenance.
    bool gated() const;
    bool operator==(const KnowledgeBase&) const = default;
};

Json to_json(const KnowledgeBase& kb);
KnowledgeBase knowledge_base_from_json(const Json& j);
void save_knowledge_base(const KnowledgeBase& kb, const std::filesystem::path& path);
KnowledgeBase load_knowledge_base(const std::filesystem::path& path);

// eta = max(1, floor(fraction * |G_j|))
int eta_for(std::size_t subgraph_size, double fraction = 0.5);

struct Outcome {
    std::string paper_id;
    Implementation manifest;
    ExecutionFeedback feedback;
    std::optional<double> gap;
};

struct InductionRequest {
    int subgraph_id = 0;
    int epoch = 0;
    int eta = 1;
    std::vector<std::string> members;
    const std::vector<Outcome>* outcomes = nullptr;
};

class Inductor {
public:
    virtual ~Inductor() = default;
    // Throws on unusable output; the caller marks the subgraph epoch failed.
    virtual std::vector<KnowledgeEntry> induce(const InductionRequest& req) = 0;
};

class ValidationHarness {
public:
    virtual ~ValidationHarness() = default;
    // Gap improvement (gap without - gap with the entry) per validation paper.
    virtual std::vector<double> evaluate(const KnowledgeEntry& entry, int subgraph_id) = 0;
};

// Fixed gains per entry pattern; unknown patterns get no runs.
class ScriptedValidation : public ValidationHarness {
public:
    explicit ScriptedValidation(std::map<std::string, std::vector<double>> gains) : gains_(std::move(gains)) {}
    std::vector<double> evaluate(const KnowledgeEntry& entry, int subgraph_id) override;

private:
    std::map<std::string, std::vector<double>> gains_;
};

struct InductionOptions {
    int eta = 1;
    int min_val_runs = kDefaultMinValRuns;
};

KnowledgeBase induce_knowledge(int subgraph_id, int epoch, const std::vector<std::string>& members,
                               const std::vector<Outcome>& outcomes, Inductor& inductor, ValidationHarness& validation,
                               const InductionOptions& options);

struct Affinity {
    std::vector<double> per_subgraph;       // s_j by subgraph index
    double unassigned = 0.0;                // weight of neighbors outside every subgraph
    std::vector<std::string> unassigned_ids;
};

Affinity subgraph_affinity(const ssgp::WeightedNeighborhood& neighborhood, const SubgraphPartition& partition);

struct Retrieval {
    std::vector<int> subgraphs;             // selected, best first
    std::vector<KnowledgeEntry> entries;    // deduplicated by (pattern, action), tagged with source
    std::vector<std::string> warnings;
};

// Top-k subgraphs by affinity (ties: lower index), union of their bases.
Retrieval retrieve_knowledge(const Affinity& affinity, const std::map<int, KnowledgeBase>& bases, int top_k);

struct CheckpointRecord {
    int epoch = 0;
    int subgraph = 0;
    std::string file;
    double mean_val_gap = 0.0;

    bool operator==(const CheckpointRecord&) const = default;
};

struct CheckpointManifest {
    std::vector<CheckpointRecord> records;
    std::map<int, double> epoch_val_gap;  // mean validation gap per epoch
    int best_epoch = 0;
    SubgraphPartition partition;
    std::vector<std::string> warnings;

    bool operator==(const CheckpointManifest&) const = default;
};

// Epoch minimizing mean validation gap; the earliest wins ties.
int select_best_epoch(const std::map<int, double>& epoch_val_gap);

Json to_json(const CheckpointManifest& m);
CheckpointManifest checkpoint_from_json(const Json& j);

} // namespace reprograph::induction
