#pragma once
// Execution-feedback refinement: Performance Gap, repair plans and the
// execute -> diagnose -> patch loop.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reprograph/executor.hpp"
#include "reprograph/feedback.hpp"
#include "reprograph/implementation.hpp"

namespace reprograph::refine {

using Json = nlohmann::json;

inline constexpr int kDefaultBudget = 50;
inline constexpr int kDefaultAttempts = 5;
inline constexpr double kDefaultTimeoutSeconds = 7200.0;

// Mean over metrics of |P - P^| / max(P, P^) * 100. A 0/0 term counts as 0.
double performance_gap(const MetricVector& official, const MetricVector& generated);

// Gap of an execution against the official metrics. Anything other than
// status=ok (timeouts included) scores as non-executable, i.e. P^ = 0; metrics
// the candidate did not report also count as 0.
double feedback_gap(const MetricVector& official, const ExecutionFeedback& feedback);

enum class ChangeType { add, modify, remove };

std::string_view to_string(ChangeType c);
ChangeType change_type_from_string(std::string_view s);

struct FileEdit {
    std::string file;
    ChangeType change_type = ChangeType::modify;
    std::string diff;  // add: the new content (or an all-"+" unified diff); modify: unified diff
    std::string risk = "low";

    bool operator==(const FileEdit&) const = default;
};

struct RepairPlan {
    std::string diagnosis;
    std::string root_cause;
    std::vector<std::string> edit_units;
    std::vector<FileEdit> edits;
    std::string expected_outcome;
    std::string fallback;
    bool no_op = false;  // a declared no-op may carry zero edits

    void validate() const;
    bool operator==(const RepairPlan&) const = default;
};

Json to_json(const RepairPlan& p);
RepairPlan plan_from_json(const Json& j);

struct Attempt {
    int iteration = 0;
    Implementation code;
    std::optional<ExecutionFeedback> feedback;
    std::optional<double> gap;
    std::optional<RepairPlan> plan;  // the plan applied to this version, if any
};

Json to_json(const Attempt& a);
Attempt attempt_from_json(const Json& j);

struct RefinementState {
    int k = 0;
    Implementation code;
    std::vector<Attempt> history;  // one entry per applied plan, so history.size() == k
    int budget = kDefaultBudget;
    double threshold = 10.0;       // gap percentage
    std::optional<ExecutionFeedback> feedback;  // latest execution of `code`
    std::optional<double> gap;
};

// Applies the edits in order to a copy of the current tree; the previous
// version is moved into history.
RefinementState apply_plan(const RefinementState& state, const RepairPlan& plan);

// Applies edits to a bare tree (shared by apply_plan and tests).
FileTree apply_edits(const FileTree& tree, const std::vector<FileEdit>& edits);

struct RepairRequest {
    std::string target_id;
    std::string paper_text;
    const Implementation* code = nullptr;
    const ExecutionFeedback* feedback = nullptr;
    const MetricVector* official = nullptr;
    double gap = 100.0;
    int iteration = 0;
    std::vector<std::string> injected_context;
};

class RepairAgent {
public:
    virtual ~RepairAgent() = default;
    // nullopt: the agent could not produce a usable plan (after its own retries).
    virtual std::optional<RepairPlan> propose(const RepairRequest& req) = 0;
};

struct RefinementOptions {
    std::string target_id;
    std::string paper_text;
    int budget = kDefaultBudget;
    double threshold = 10.0;
    double timeout_seconds = kDefaultTimeoutSeconds;
    std::vector<std::string> injected_context;
};

struct RefinementResult {
    Implementation best;
    double best_gap = 100.0;
    int best_iteration = 0;
    ExecutionFeedback best_feedback;
    ExecutionFeedback final_feedback;
    std::vector<Attempt> history;  // every executed version, in order
    int executions = 0;
    bool converged = false;        // some execution went below the threshold
    bool aborted = false;          // the agent gave up; best-so-far returned
    std::string abort_reason;
};

Json to_json(const RefinementResult& r);
RefinementResult refinement_from_json(const Json& j);

// Executes, scores, asks for a plan and applies it until the gap drops below
// the threshold or `budget` plans have been applied; at most budget+1
// executions. Returns the best-gap version seen, earliest on ties.
RefinementResult run_refinement(const Implementation& initial, Executor& executor, RepairAgent& agent,
                                const MetricVector& official, const RefinementOptions& options);

} // namespace reprograph::refine
