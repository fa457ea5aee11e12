#include "reprograph/agent/response.hpp"

#include <map>
#include <set>

#include "reprograph/agent/schema.hpp"
#include "reprograph/diff.hpp"

namespace reprograph::agent {

std::string_view to_string(ErrorClass c) {
    switch (c) {
        case ErrorClass::malformed_json: return "malformed_json";
        case ErrorClass::schema_violation: return "schema_violation";
        case ErrorClass::semantic_violation: return "semantic_violation";
    }
    return "malformed_json";
}

ErrorClass error_class_from_string(std::string_view s) {
    if (s == "malformed_json") return ErrorClass::malformed_json;
    if (s == "schema_violation") return ErrorClass::schema_violation;
    if (s == "semantic_violation") return ErrorClass::semantic_violation;
    throw ConfigError("unknown error class '" + std::string(s) + "'");
}

std::string strip_wrapping(std::string_view raw) {
    std::string s(raw);
    auto fence = s.find("```");
    if (fence != std::string::npos) {
        auto body = s.find('\n', fence);
        auto close = body == std::string::npos ? std::string::npos : s.find("```", body);
        if (close != std::string::npos) s = s.substr(body + 1, close - body - 1);
    }
    auto first = s.find_first_of("{[");
    if (first == std::string::npos) return s;
    const char close_ch = s[first] == '{' ? '}' : ']';
    auto last = s.rfind(close_ch);
    if (last == std::string::npos || last < first) return s.substr(first);
    return s.substr(first, last - first + 1);
}

namespace {

[[noreturn]] void semantic(const std::string& what) { throw ResponseError(ErrorClass::semantic_violation, what); }

void check_reviewer(const Json& doc, const ParseContext& ctx) {
    std::set<std::string> ids;
    std::set<int> ranks;
    const auto& ranking = doc["ranking"];
    for (const auto& r : ranking) {
        if (!ids.insert(r["paper_id"].get<std::string>()).second)
            semantic("candidate '" + r["paper_id"].get<std::string>() + "' ranked twice");
        ranks.insert(r["rank"].get<int>());
    }
    const auto n = static_cast<int>(ranking.size());
    if (static_cast<int>(ranks.size()) != n || (n > 0 && (*ranks.begin() != 1 || *ranks.rbegin() != n)))
        semantic("ranks must form a permutation of 1.." + std::to_string(n));
    if (ctx.candidate_ids) {
        std::set<std::string> expected(ctx.candidate_ids->begin(), ctx.candidate_ids->end());
        if (expected != ids) semantic("ranking does not cover exactly the given candidates");
    }
}

void check_relation(const Json& doc) {
    try {
        relation::validate_annotation(relation::annotation_from_json("target", "neighbor", doc));
    } catch (const ValidationError& e) {
        semantic(e.what());
    }
}

void check_encapsulator(const Json& doc) {
    std::set<std::string> names;
    for (const auto& api : doc) {
        if (!names.insert(api["api_name"].get<std::string>()).second)
            semantic("api '" + api["api_name"].get<std::string>() + "' emitted twice");
        if (api["kind"] == "new" && api["code"].get<std::string>().find("NotImplementedError") == std::string::npos)
            semantic("new api '" + api["api_name"].get<std::string>() + "' must be a NotImplementedError stub");
    }
}

void check_advisor(const Json& doc) {
    std::set<std::string> units;
    for (const char* key : {"selected", "deferred"})
        for (const auto& u : doc[key])
            if (!units.insert(relation::normalize_unit_name(u["unit_name"].get<std::string>())).second)
                semantic("unit '" + u["unit_name"].get<std::string>() + "' decided more than once");
}

void check_repair(const Json& doc) {
    refine::RepairPlan plan;
    try {
        plan = refine::plan_from_json(doc);
        plan.validate();
    } catch (const Error& e) {
        semantic(e.what());
    }
    for (const auto& e : plan.edits)
        if (e.change_type == refine::ChangeType::modify && !is_unified_diff(e.diff))
            semantic("modify edit of '" + e.file + "' must carry a unified diff");
}

void check_orchestrator(const Json& doc) {
    std::set<std::string> files;
    for (const auto& a : doc["code_actions"])
        if (!files.insert(a["file"].get<std::string>()).second)
            semantic("file '" + a["file"].get<std::string>() + "' has more than one code action");
    try {
        plan_from_orchestrator(doc).validate();
    } catch (const Error& e) {
        semantic(e.what());
    }
}

void check_inductor(const Json& doc) {
    for (const auto& e : doc) {
        auto [count, total] = induction::parse_frequency(e["frequency"].get<std::string>());
        if (count > total) semantic("entry '" + e["pattern"].get<std::string>() + "' has frequency count above total");
    }
}

void check_injector(const Json& doc) {
    std::set<std::string> selected;
    for (const auto& e : doc["selected_entries"]) selected.insert(e["pattern"].get<std::string>());
    for (const auto& e : doc["rejected_entries"])
        if (selected.count(e["pattern"].get<std::string>()))
            semantic("entry '" + e["pattern"].get<std::string>() + "' is both selected and rejected");
}

} // namespace

Json parse_response(std::string_view name, std::string_view raw, const ParseContext& ctx) {
    Json doc;
    try {
        doc = Json::parse(strip_wrapping(raw));
    } catch (const Json::parse_error& e) {
        throw ResponseError(ErrorClass::malformed_json, e.what());
    }
    if (auto err = validate_schema(response_schema(name), doc)) throw ResponseError(ErrorClass::schema_violation, *err);

    if (name == "reviewer") check_reviewer(doc, ctx);
    else if (name == "relation_analyzer") check_relation(doc);
    else if (name == "encapsulator") check_encapsulator(doc);
    else if (name == "aggregator_advisor") check_advisor(doc);
    else if (name == "repro_agent") check_repair(doc);
    else if (name == kOrchestratorTemplate) check_orchestrator(doc);
    else if (name == "inductor") check_inductor(doc);
    else if (name == "injector") check_injector(doc);
    return doc;
}

Json parse_response(Role role, std::string_view raw, const ParseContext& ctx) {
    return parse_response(template_name(role), raw, ctx);
}

ssgp::RankingBallot ballot_from_response(const Json& doc, const std::string& reviewer_id) {
    ssgp::RankingBallot b;
    b.reviewer_id = reviewer_id;
    for (const auto& r : doc.at("ranking")) {
        const auto id = r.at("paper_id").get<std::string>();
        b.ranks[id] = r.at("rank").get<int>();
        Json extra = r;
        extra.erase("paper_id");
        extra.erase("rank");
        b.provenance["ranking"][id] = extra;
    }
    if (doc.contains("unknown")) b.provenance["unknown"] = doc["unknown"];
    ssgp::check_permutation(b);
    return b;
}

std::vector<relation::ApiUnit> api_units_from_response(const Json& doc, const std::string& neighbor_id) {
    std::vector<relation::ApiUnit> out;
    for (const auto& api : doc) {
        relation::ApiUnit u;
        u.api_name = relation::normalize_unit_name(api.at("api_name").get<std::string>());
        u.unit_name = u.api_name;
        u.kind = unit_kind_from_string(api.at("kind").get<std::string>());
        u.source = api.contains("source") && !is_unknown(api["source"].get<std::string>()) ? api["source"].get<std::string>()
                                                                                          : neighbor_id;
        u.signature = api.value("signature", "");
        u.dependencies = api.value("dependencies", std::vector<std::string>{});
        u.code_body = api.at("code").get<std::string>();
        u.notes = api.value("notes", "");
        out.push_back(std::move(u));
    }
    return out;
}

refine::RepairPlan plan_from_orchestrator(const Json& doc, const FileTree* current) {
    refine::RepairPlan p;
    p.diagnosis = "iterative repair";
    for (const auto& step : doc.value("plan", Json::array())) p.diagnosis += (p.diagnosis.empty() ? "" : "; ") + step.get<std::string>();
    p.root_cause = "unknown";
    for (const auto& a : doc.at("code_actions")) {
        refine::FileEdit e;
        e.file = a.at("file").get<std::string>();
        e.change_type = a.at("action") == "create" ? refine::ChangeType::add : refine::ChangeType::modify;
        e.diff = a.at("content_or_diff").get<std::string>();
        if (current && !is_unified_diff(e.diff)) {
            // full content: a rewrite of an existing file, an add otherwise
            auto it = current->find(e.file);
            if (it == current->end()) {
                e.change_type = refine::ChangeType::add;
            } else {
                e.change_type = refine::ChangeType::modify;
                e.diff = full_rewrite_diff(it->second, e.diff);
            }
        }
        p.edits.push_back(std::move(e));
        p.edit_units.push_back(p.edits.back().file);
    }
    std::string checks;
    for (const auto& v : doc.value("verification", Json::array())) checks += (checks.empty() ? "" : "; ") + v.get<std::string>();
    p.expected_outcome = checks.empty() ? "unknown" : checks;
    p.fallback = "unknown";
    p.no_op = p.edits.empty();
    return p;
}

std::vector<induction::KnowledgeEntry> entries_from_response(const Json& doc) {
    std::vector<induction::KnowledgeEntry> out;
    for (const auto& e : doc) out.push_back(induction::entry_from_json(e));
    return out;
}

InjectionPackage injection_from_response(const Json& doc) {
    InjectionPackage p;
    p.target_paper_id = doc.at("target_paper_id").get<std::string>();
    for (const auto& e : doc.at("selected_entries")) p.selected_patterns.push_back(e.at("pattern").get<std::string>());
    for (const auto& e : doc.at("rejected_entries")) p.rejected_patterns.push_back(e.at("pattern").get<std::string>());
    p.injected_context = doc.at("injected_context").get<std::vector<std::string>>();
    return p;
}

} // namespace reprograph::agent
