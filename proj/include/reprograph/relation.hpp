#pragma once
// Node-level relation-aware aggregation: relation annotations, API
// encapsulation, callability validation and priority-based unit selection.

#include <map>
#include <set>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reprograph/executor.hpp"
#include "reprograph/implementation.hpp"

namespace reprograph::relation {

using Json = nlohmann::json;

inline constexpr double kDefaultBeta = 0.15;

enum class Risk { low, medium, high };

std::string_view to_string(Risk r);
Risk risk_from_string(std::string_view s);

// "Item Encoder", "itemEncoder", "item-encoder" -> "item_encoder"
std::string normalize_unit_name(std::string_view name);

struct UnitDecl {
    std::string unit_name;
    std::string description;
    std::optional<std::string> code_location;  // "file", "file:symbol", "file:Class.method", "file:N[-M]"
    Risk risk = Risk::low;
    std::string evidence = "unknown";
    std::string reason;                        // new units: why there is no counterpart

    bool operator==(const UnitDecl&) const = default;
};

struct RelationAnnotation {
    std::string target_id;
    std::string neighbor_id;
    std::vector<UnitDecl> reuse_units;
    std::vector<UnitDecl> adapt_units;
    std::vector<UnitDecl> new_units;
    std::map<std::string, std::string> diff_instructions;  // adapt unit -> instruction

    std::size_t unit_count() const { return reuse_units.size() + adapt_units.size() + new_units.size(); }
    bool operator==(const RelationAnnotation&) const = default;
};

// Returns a copy with unit names normalized. Throws ValidationError listing
// every violated invariant together with the unit names involved.
RelationAnnotation validate_annotation(const RelationAnnotation& a);

Json to_json(const RelationAnnotation& a);
// Parses the relation-analysis output shape (reusable_units / adaptable_units / new_units).
RelationAnnotation annotation_from_json(const std::string& target_id, const std::string& neighbor_id, const Json& j);

enum class Callability { unvalidated, pass, fail };

std::string_view to_string(Callability c);

struct ApiUnit {
    std::string api_name;
    std::string unit_name;
    UnitKind kind = UnitKind::new_unit;
    std::string source;  // neighbor id, or "stub"
    std::string signature;
    std::vector<std::string> dependencies;
    std::string code_body;
    std::string code_location;
    std::optional<std::string> applied_diff;  // adapt provenance
    std::string notes;
    Callability callability = Callability::unvalidated;
    std::string callability_reason;            // failure reason, or why it stayed unvalidated

    std::string qualified_name() const { return source + "/" + api_name; }
    bool operator==(const ApiUnit&) const = default;
};

Json to_json(const ApiUnit& u);
ApiUnit api_unit_from_json(const Json& j);

// Extracts code for a location inside a neighbor's code tree.
class CodeProvider {
public:
    virtual ~CodeProvider() = default;
    // Throws ValidationError when the location cannot be resolved.
    virtual std::string extract(const std::string& neighbor_id, const std::string& location) const = 0;
};

class TreeCodeProvider : public CodeProvider {
public:
    void add(const std::string& neighbor_id, FileTree tree) { trees_[neighbor_id] = std::move(tree); }
    std::string extract(const std::string& neighbor_id, const std::string& location) const override;

private:
    std::map<std::string, FileTree> trees_;
};

// Python-aware extraction used by TreeCodeProvider.
std::string extract_location(const FileTree& tree, const std::string& location);

struct AdaptRequest {
    std::string target_id;
    std::string neighbor_id;
    UnitDecl unit;
    std::string source_code;
    std::string diff_instruction;
};

// The adaptation agent: rewrites source code according to a diff instruction.
class Transformer {
public:
    virtual ~Transformer() = default;
    virtual std::string adapt(const AdaptRequest& req) = 0;
};

std::string stub_body(const std::string& unit_name);

// Reuse units are extracted verbatim, adapt units go through the transformer,
// new units become not-implemented stubs. A transformer failure marks the unit
// failed instead of dropping it.
std::vector<ApiUnit> encapsulate(const RelationAnnotation& a, const CodeProvider& code, Transformer& transformer);

struct CallabilityCheck {
    bool pass = false;
    std::string reason;
};

class CallabilityBackend {
public:
    virtual ~CallabilityBackend() = default;
    // Throws ExecutorUnavailable if the backend cannot check anything.
    virtual CallabilityCheck check(const ApiUnit& unit) = 0;
};

// Offline checks over Python source: bracket/indentation parse, every import and
// listed dependency resolvable from the stdlib or `provided`, and presence of a
// callable top-level definition.
class StaticCallabilityChecker : public CallabilityBackend {
public:
    explicit StaticCallabilityChecker(std::set<std::string> provided = {}) : provided_(std::move(provided)) {}
    CallabilityCheck check(const ApiUnit& unit) override;

private:
    std::set<std::string> provided_;
};

// Modules a code tree makes importable: its top-level modules and packages plus
// the distributions named in a root requirements.txt.
std::set<std::string> provided_modules(const FileTree& tree);

// Runs a generated smoke harness through an execution backend.
class ExecutorCallabilityBackend : public CallabilityBackend {
public:
    explicit ExecutorCallabilityBackend(Executor& executor, double timeout_seconds = 60.0)
        : executor_(executor), timeout_(timeout_seconds) {}
    CallabilityCheck check(const ApiUnit& unit) override;

private:
    Executor& executor_;
    double timeout_;
};

ApiUnit validate_callability(const ApiUnit& unit, CallabilityBackend& backend);

// p = w + beta * 1[reuse]. New units never compete.
double priority(const ApiUnit& candidate, double edge_weight, double beta);

struct Alternative {
    std::string api_name;
    std::string source;
    UnitKind kind = UnitKind::reuse;
    double edge_weight = 0.0;
    std::optional<double> priority;       // absent for excluded candidates
    std::optional<std::string> excluded;  // why it did not compete

    bool operator==(const Alternative&) const = default;
};

struct Selection {
    std::string unit_name;
    ApiUnit chosen;
    double priority = 0.0;
    double edge_weight = 0.0;
    std::string reason;
    std::vector<Alternative> alternatives;

    bool operator==(const Selection&) const = default;
};

struct Deferred {
    std::string unit_name;
    std::string reason;
    std::string next_step;
    std::string stub_code;

    bool operator==(const Deferred&) const = default;
};

struct AggregationResult {
    std::map<std::string, Selection> selections;
    std::vector<Deferred> deferred;
    std::vector<std::string> warnings;  // near-miss unit names

    bool operator==(const AggregationResult&) const = default;
};

using CandidateMap = std::map<std::string, std::vector<std::pair<ApiUnit, double>>>;

// Groups encapsulated units by normalized unit name, pairing each with its neighbor's edge weight.
void add_candidates(CandidateMap& map, const std::vector<ApiUnit>& units, double edge_weight);

// Per unit, selects the highest-priority passing reuse/adapt candidate.
// Ties: reuse over adapt, higher edge weight, neighbor id, api name.
AggregationResult aggregate_neighborhood(const CandidateMap& candidates, double beta);

Json to_json(const AggregationResult& r);

// C^(init): one file per unit under units/<unit>.py, with origin provenance.
Implementation assemble(const AggregationResult& r);

} // namespace reprograph::relation
