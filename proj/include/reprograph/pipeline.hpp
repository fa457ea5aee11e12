#pragma once
// End-to-end orchestration: per-target reproduction with persisted,
// resumable stages, knowledge-base training, and run reports.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reprograph/agent/backend.hpp"
#include "reprograph/agent/http.hpp"
#include "reprograph/agent/mock.hpp"
#include "reprograph/executor.hpp"
#include "reprograph/graph.hpp"
#include "reprograph/knowledge.hpp"
#include "reprograph/refine.hpp"
#include "reprograph/relation.hpp"
#include "reprograph/ssgp.hpp"

namespace reprograph::pipeline {

using Json = nlohmann::json;
namespace fs = std::filesystem;

enum class BackendKind { mock, live };
enum class ExecutorKind { reference, sandbox };
enum class CallabilityKind { static_check, executor };

struct RunConfig {
    fs::path graph_file;
    std::vector<std::string> targets;
    fs::path output_dir = "out";

    BackendKind backend = BackendKind::mock;
    fs::path mock_profile;        // optional; empty profile otherwise
    bool mock_oracle = false;     // give the mock repro agent the official trees
    agent::HttpOptions live;
    int retries = agent::kDefaultRetries;
    int max_in_flight = 4;

    int reviewers = 5;
    double lambda = 0.5;
    int k_keep = 3;
    double beta = relation::kDefaultBeta;

    int budget = refine::kDefaultBudget;
    double threshold = 10.0;
    int attempts = refine::kDefaultAttempts;
    double timeout_seconds = refine::kDefaultTimeoutSeconds;

    double eta_fraction = 0.5;
    int epochs = induction::kDefaultEpochs;
    int top_k = induction::kDefaultTopK;
    int min_val_runs = induction::kDefaultMinValRuns;
    int injection_passes = 1;     // plans allowed in the knowledge-injection pass
    fs::path knowledge;           // checkpoint manifest used by reproduce

    std::optional<std::uint64_t> seed;
    int workers = 1;

    ExecutorKind executor = ExecutorKind::reference;
    std::vector<std::string> runner{"python3", "-m", "sandbox_runner"};
    CallabilityKind callability = CallabilityKind::static_check;

    std::optional<std::string> fail_before_stage;  // fault injection for resume tests

    // Throws ConfigError on out-of-range values or a mock run without seed.
    void validate() const;
};

Json to_json(const RunConfig& c);

struct CodeSource {
    double reuse = 0.0;
    double adapt = 0.0;
    double fresh = 0.0;  // newly generated
    bool empty = true;

    bool operator==(const CodeSource&) const = default;
};

// Percentages by line count of the unit bodies; (0,0,0) for an empty manifest.
CodeSource code_source_breakdown(const Implementation& manifest);

struct TargetReport {
    std::string target_id;
    double initial_gap = 100.0;
    double refined_gap = 100.0;
    double final_gap = 100.0;
    CodeSource code_source;
    int iterations = 0;                  // plans applied in the best attempt
    std::vector<double> attempt_gaps;
    int best_attempt = 0;
    bool converged = false;
    std::vector<std::string> neighborhood;
    std::vector<int> knowledge_subgraphs;
    std::size_t knowledge_entries = 0;
    std::string transcripts;             // relative to the output directory
    std::size_t transcript_count = 0;
    std::vector<std::string> warnings;

    bool operator==(const TargetReport&) const = default;
};

struct RunReport {
    std::vector<TargetReport> targets;
    bool operator==(const RunReport&) const = default;
};

Json to_json(const TargetReport& r);
TargetReport target_report_from_json(const Json& j);
Json to_json(const RunReport& r);
RunReport run_report_from_json(const Json& j);

// Code tree of a paper directory (reference_metrics.json excluded).
FileTree load_code_tree(const fs::path& dir);
MetricVector load_reference_metrics(const fs::path& dir);

// Recomputes every gap in a persisted report from its metric files; returns
// one message per mismatch.
std::vector<std::string> verify_report(const fs::path& output_dir);

class Engine {
public:
    explicit Engine(RunConfig cfg);
    ~Engine();

    const RunConfig& config() const noexcept { return cfg_; }
    const CitationGraph& graph() const noexcept { return graph_; }

    // Code-bearing neighbors of a target, sorted by id.
    std::vector<std::string> candidate_neighbors(const std::string& target) const;
    bool has_code(const std::string& id) const;
    FileTree code_of(const std::string& id) const;
    MetricVector official_metrics(const std::string& id) const;

    struct PruneStage {
        ssgp::WeightedNeighborhood neighborhood;
        std::vector<std::string> warnings;
    };
    struct AggregateStage {
        Implementation initial;
        Json aggregation;  // selected / deferred / warnings
        std::vector<std::string> warnings;
    };

    // Stages, each persisted under <output>/<target>/ and skipped when already done.
    PruneStage prune(const std::string& target);
    AggregateStage aggregate(const std::string& target, const ssgp::WeightedNeighborhood& n);
    // Plans applied are persisted in <output>/<target>/<stage_dir>/result.json.
    refine::RefinementResult refine(const std::string& target, const Implementation& initial,
                                    const std::string& stage_dir, const std::vector<std::string>& injected = {},
                                    int budget = -1);

    TargetReport reproduce(const std::string& target);
    RunReport reproduce_all();

    // Lightweight reproduction used by training and validation: no persistence,
    // one attempt, optional injected context. Returns (final implementation, feedback, gap).
    induction::Outcome reproduce_quick(const std::string& target, const std::vector<std::string>& injected);

    // Training over the train split, validating on the validation split. A
    // harness override replaces reproduction-based validation (tests script gains with it).
    induction::CheckpointManifest train_knowledge(induction::ValidationHarness* validation = nullptr);

    induction::TaskGraph task_graph();

private:
    struct Context;
    Context& context_for(const std::string& key);
    void check_fault(const std::string& stage) const;
    agent::AgentClient client(const std::string& key);
    std::unique_ptr<Executor> executor_for(const std::string& target, const fs::path& scratch) const;
    std::unique_ptr<relation::CallabilityBackend> callability_backend(const FileTree& neighbor, const fs::path& scratch) const;
    refine::RefinementOptions refine_options(const std::string& target, const std::vector<std::string>& injected,
                                             int budget) const;

    RunConfig cfg_;
    CitationGraph graph_;
    fs::path graph_dir_;
    std::unique_ptr<agent::MockBackend> mock_;
    std::unique_ptr<agent::HttpChatBackend> http_;
    std::unique_ptr<agent::BoundedBackend> bounded_;
    std::mutex mu_;
    std::map<std::string, std::unique_ptr<Context>> contexts_;
};

} // namespace reprograph::pipeline
