#include "reprograph/agent/adapters.hpp"

#include <regex>
#include <sstream>

namespace reprograph::agent {

namespace {

Json files_json(const FileTree& tree) {
    Json j = Json::object();
    for (const auto& [path, content] : tree) j[path] = content;
    return j;
}

std::string render_tree(const FileTree& tree) {
    std::string out;
    for (const auto& [path, content] : tree) {
        out += "### " + path + "\n" + content;
        if (!content.empty() && content.back() != '\n') out += '\n';
    }
    return out.empty() ? "unknown" : out;
}

} // namespace

Json summarize_paper(AgentClient& client, const PaperNode& paper) {
    const auto text = paper.method_experiments();
    return client.call(Role::summarizer, {{"paper_id", paper.id}, {"method_experiments", text}},
                       {{"paper_id", paper.id}, {"title", paper.title}, {"method_experiments", text}});
}

std::vector<ssgp::RankingBallot> collect_ballots(AgentClient& client, const Json& target_summary,
                                                 const std::vector<Candidate>& candidates, int reviewers,
                                                 std::uint64_t seed) {
    std::map<std::string, const Json*> by_id;
    std::vector<std::string> ids;
    for (const auto& c : candidates) {
        by_id[c.id] = &c.summary;
        ids.push_back(c.id);
    }
    std::vector<ssgp::RankingBallot> ballots;
    for (int r = 0; r < reviewers; ++r) {
        const auto order = ssgp::presentation_order(ids, seed, r);
        Json shown = Json::array();
        for (const auto& id : order) shown.push_back({{"paper_id", id}, {"summary", *by_id.at(id)}});
        ParseContext ctx;
        ctx.candidate_ids = ids;
        auto doc = client.call(Role::reviewer, {{"target_summary", target_summary.dump(2)}, {"candidate_summaries", shown.dump(2)}},
                               {{"reviewer", r}, {"target_summary", target_summary}, {"candidates", shown}}, ctx);
        ballots.push_back(ballot_from_response(doc, "reviewer-" + std::to_string(r)));
    }
    return ballots;
}

std::string code_index(const FileTree& tree) {
    static const std::regex def(R"(^(?:async\s+)?(?:def|class)\s+([A-Za-z_][A-Za-z0-9_]*))");
    std::string out;
    for (const auto& [path, content] : tree) {
        out += path;
        std::istringstream in(content);
        std::string line, names;
        while (std::getline(in, line)) {
            std::smatch m;
            if (std::regex_search(line, m, def)) names += (names.empty() ? "" : ", ") + m[1].str();
        }
        if (!names.empty()) out += ": " + names;
        out += '\n';
    }
    return out.empty() ? "unknown" : out;
}

relation::RelationAnnotation analyze_relation(AgentClient& client, const PaperNode& target, const PaperNode& neighbor,
                                              const FileTree& neighbor_code) {
    const auto doc = client.call(Role::relation_analyzer,
                                 {{"target_paper_text", target.method_experiments()},
                                  {"neighbor_paper_text", neighbor.method_experiments()},
                                  {"neighbor_code_index", code_index(neighbor_code)}},
                                 {{"target_id", target.id}, {"neighbor_id", neighbor.id}});
    return relation::validate_annotation(relation::annotation_from_json(target.id, neighbor.id, doc));
}

std::string AgentTransformer::adapt(const relation::AdaptRequest& req) {
    const Json annotation = {{"adaptable_units",
                              Json::array({{{"unit_name", req.unit.unit_name},
                                            {"description", req.unit.description},
                                            {"code_location", req.unit.code_location.value_or("unknown")},
                                            {"diff_instruction", req.diff_instruction}}})}};
    const auto doc = client_.call(Role::encapsulator,
                                  {{"relation_annotation", annotation.dump(2)}, {"code_snippets", req.source_code}},
                                  {{"neighbor_id", req.neighbor_id},
                                   {"unit_name", req.unit.unit_name},
                                   {"source_code", req.source_code},
                                   {"diff_instruction", req.diff_instruction}});
    const auto units = api_units_from_response(doc, req.neighbor_id);
    for (const auto& u : units)
        if (u.api_name == req.unit.unit_name) return u.code_body;
    if (units.empty()) throw ValidationError("encapsulator returned no api for '" + req.unit.unit_name + "'");
    return units.front().code_body;
}

Json advise_aggregation(AgentClient& client, const relation::CandidateMap& candidates,
                        const ssgp::WeightedNeighborhood& neighborhood, double beta,
                        const relation::AggregationResult& computed) {
    Json apis = Json::object();
    for (const auto& [unit, list] : candidates)
        for (const auto& [api, w] : list)
            apis[unit].push_back({{"api_name", api.api_name},
                                  {"kind", std::string(to_string(api.kind))},
                                  {"source", api.source},
                                  {"callability", std::string(to_string(api.callability))}});
    Json weights = Json::object();
    for (const auto& m : neighborhood.members) weights[m.candidate_id] = m.weight;
    std::ostringstream b;
    b << beta;
    return client.call(Role::aggregator_advisor,
                       {{"candidate_apis", apis.dump(2)}, {"edge_weights", weights.dump(2)}, {"beta", b.str()}},
                       {{"computed", relation::to_json(computed)}});
}

std::optional<refine::RepairPlan> AgentRepairAgent::propose(const refine::RepairRequest& req) {
    const FileTree& tree = req.code->files;
    const std::string feedback = req.feedback ? to_json(*req.feedback).dump(2) : "unknown";
    const std::string current = req.feedback && req.feedback->metrics ? to_json(*req.feedback->metrics).dump() : "unknown";
    const std::string reference = req.official ? to_json(*req.official).dump() : "unknown";
    const Json payload = {{"target_id", req.target_id}, {"iteration", req.iteration}, {"gap", req.gap}, {"files", files_json(tree)}};
    try {
        if (!req.injected_context.empty()) {
            std::string context;
            for (const auto& c : req.injected_context) context += "- " + c + "\n";
            auto doc = client_.call(Role::repro_agent,
                                    {{"target_paper_id", req.target_id},
                                     {"target_paper_text", req.paper_text},
                                     {"current_code", render_tree(tree)},
                                     {"selected_modules", "unknown"},
                                     {"execution_feedback", feedback},
                                     {"injected_knowledge_context", context},
                                     {"runtime_constraints", "unknown"}},
                                    payload, {}, kOrchestratorTemplate);
            return plan_from_orchestrator(doc, &tree);
        }
        auto doc = client_.call(Role::repro_agent,
                                {{"target_paper_text", req.paper_text},
                                 {"current_code", render_tree(tree)},
                                 {"execution_feedback", feedback},
                                 {"current_metrics", current},
                                 {"reference_metrics", reference}},
                                payload);
        return refine::plan_from_json(doc);
    } catch (const AgentCallFailed&) {
        return std::nullopt;
    }
}

std::vector<induction::KnowledgeEntry> AgentInductor::induce(const induction::InductionRequest& req) {
    Json outcomes = Json::array();
    for (const auto& o : *req.outcomes) {
        Json units = Json::array();
        for (const auto& u : o.manifest.units) units.push_back({{"unit", u.unit_name}, {"kind", std::string(to_string(u.kind))}});
        outcomes.push_back({{"paper_id", o.paper_id},
                            {"gap", o.gap ? Json(*o.gap) : Json("unknown")},
                            {"status", std::string(to_string(o.feedback.status))},
                            {"error_message", o.feedback.error_message.value_or("")},
                            {"units", units}});
    }
    const auto doc = client_.call(Role::inductor,
                                  {{"task_name", task_},
                                   {"domain", domain_},
                                   {"subgraph_id", std::to_string(req.subgraph_id)},
                                   {"min_frequency", std::to_string(req.eta)},
                                   {"execution_feedback_outcomes", outcomes.dump(2)}},
                                  {{"epoch", req.epoch}, {"subgraph_id", req.subgraph_id}, {"members", req.members}});
    return entries_from_response(doc);
}

InjectionPackage inject_knowledge(AgentClient& client, const std::string& target_id, const Json& target_summary,
                                  const Implementation& current, const std::vector<induction::KnowledgeEntry>& entries) {
    Json list = Json::array();
    for (const auto& e : entries) list.push_back(to_json(e));
    std::string state;
    for (const auto& u : current.units) state += u.unit_name + " (" + std::string(to_string(u.kind)) + " from " + u.source + ")\n";
    const auto doc = client.call(Role::injector,
                                 {{"target_paper_id", target_id},
                                  {"target_summary", target_summary.dump(2)},
                                  {"current_state", state.empty() ? "unknown" : state},
                                  {"retrieved_knowledge_entries", list.dump(2)}},
                                 {{"target_paper_id", target_id}, {"entries", list}});
    return injection_from_response(doc);
}

} // namespace reprograph::agent
