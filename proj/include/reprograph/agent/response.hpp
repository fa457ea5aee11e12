#pragma once
// Parsing and validation of raw agent responses, plus typed views of the
// validated documents.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reprograph/agent/roles.hpp"
#include "reprograph/error.hpp"
#include "reprograph/knowledge.hpp"
#include "reprograph/refine.hpp"
#include "reprograph/relation.hpp"
#include "reprograph/ssgp.hpp"

namespace reprograph::agent {

using Json = nlohmann::json;

enum class ErrorClass { malformed_json, schema_violation, semantic_violation };

std::string_view to_string(ErrorClass c);
ErrorClass error_class_from_string(std::string_view s);

class ResponseError : public Error {
public:
    ResponseError(ErrorClass cls, const std::string& what) : Error(std::string(to_string(cls)) + ": " + what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

// The backend could not deliver any response (network, HTTP status, auth).
class TransportError : public Error {
public:
    using Error::Error;
};

// Extra facts a semantic rule may need beyond the response itself.
struct ParseContext {
    std::optional<std::vector<std::string>> candidate_ids;  // reviewer: every candidate must be ranked
};

// Removes markdown fences or prose around the JSON payload.
std::string strip_wrapping(std::string_view raw);

// Strip, parse, check the schema bound to the template, then the role's
// semantic rules. Throws ResponseError with the failing class.
Json parse_response(std::string_view template_name, std::string_view raw, const ParseContext& ctx = {});
Json parse_response(Role role, std::string_view raw, const ParseContext& ctx = {});

// Typed views over validated documents.
ssgp::RankingBallot ballot_from_response(const Json& doc, const std::string& reviewer_id);
std::vector<relation::ApiUnit> api_units_from_response(const Json& doc, const std::string& neighbor_id);
// With the current tree, an action carrying full content becomes a whole-file
// rewrite of an existing file, or an add when the file is missing.
refine::RepairPlan plan_from_orchestrator(const Json& doc, const FileTree* current = nullptr);
std::vector<induction::KnowledgeEntry> entries_from_response(const Json& doc);

struct InjectionPackage {
    std::string target_paper_id;
    std::vector<std::string> selected_patterns;
    std::vector<std::string> rejected_patterns;
    std::vector<std::string> injected_context;

    bool operator==(const InjectionPackage&) const = default;
};

InjectionPackage injection_from_response(const Json& doc);

} // namespace reprograph::agent
