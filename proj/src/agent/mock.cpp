#include "reprograph/agent/mock.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>

#include "reprograph/diff.hpp"
#include "reprograph/error.hpp"

namespace reprograph::agent {

MockProfile profile_from_json(const Json& j) {
    MockProfile p;
    p.reviewer_noise = j.value("reviewer_noise", 0.0);
    p.relations = j.value("relations", Json::object());
    p.transforms = j.value("transforms", Json::object());
    p.induction = j.value("induction", Json::object());
    if (j.contains("repair")) {
        const auto mode = j["repair"].value("mode", "noop");
        if (mode == "noop") p.repair_mode = RepairMode::noop;
        else if (mode == "scripted") p.repair_mode = RepairMode::scripted;
        else if (mode == "oracle") p.repair_mode = RepairMode::oracle;
        else throw ConfigError("unknown mock repair mode '" + mode + "'");
        p.plans = j["repair"].value("plans", Json::object());
    }
    return p;
}

MockProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read mock profile " + path.string());
    try {
        return profile_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw ConfigError("mock profile " + path.string() + ": " + e.what());
    }
}

namespace {

void tokens_of(const Json& v, std::set<std::string>& out) {
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        std::string tok;
        auto flush = [&] {
            if (!tok.empty() && tok != "unknown") out.insert(tok);
            tok.clear();
        };
        for (char c : s) {
            if (std::isalnum(static_cast<unsigned char>(c))) tok += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            else flush();
        }
        flush();
    } else if (v.is_structured()) {
        for (const auto& child : v) tokens_of(child, out);
    }
}

// FNV-1a, stable across platforms
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

const Json* lookup(const Json& table, const std::string& a, const std::string& b) {
    for (const auto& key : {a + "|" + b, a + "|*", "*|" + b, std::string("*|*")})
        if (table.contains(key)) return &table[key];
    return nullptr;
}

FileTree tree_of(const Json& files) {
    FileTree t;
    for (const auto& [k, v] : files.items()) t[k] = v.get<std::string>();
    return t;
}

Json noop_plan(const std::string& why) {
    return {{"diagnosis", why},        {"root_cause", "unknown"}, {"edit_units", Json::array()},
            {"edits", Json::array()},  {"expected_outcome", "unknown"}, {"fallback", "unknown"},
            {"no_op", true}};
}

} // namespace

std::set<std::string> summary_tokens(const Json& summary) {
    std::set<std::string> out;
    tokens_of(summary, out);
    return out;
}

std::string MockBackend::complete(const AgentRequest& req) {
    const auto& p = req.payload;
    Json out;
    if (req.template_name == kOrchestratorTemplate) {
        out = repair(p, true);
    } else {
        switch (req.role) {
            case Role::summarizer: out = summarize(p); break;
            case Role::reviewer: out = review(p); break;
            case Role::relation_analyzer: out = relate(p); break;
            case Role::encapsulator: out = encapsulate(p); break;
            case Role::aggregator_advisor: out = advise(p); break;
            case Role::repro_agent: out = repair(p, false); break;
            case Role::inductor: out = induce(p); break;
            case Role::injector: out = inject(p); break;
        }
    }
    return out.dump(2);
}

Json MockBackend::summarize(const Json& p) const {
    const std::string text = p.value("method_experiments", "");
    return {{"paper_id", p.value("paper_id", "unknown")},
            {"method_summary", text.empty() ? "unknown" : text},
            {"components", Json::array()},
            {"architecture", {{"backbone", "unknown"}, {"key_blocks", Json::array()}, {"input_outputs", "unknown"}}},
            {"training",
             {{"optimizer", "unknown"}, {"learning_rate", "unknown"}, {"schedule", "unknown"}, {"batch_size", "unknown"},
              {"epochs", "unknown"}, {"losses", Json::array()}, {"regularization", "unknown"}}},
            {"hyperparameters", Json::object()},
            {"data", {{"datasets", Json::array()}, {"preprocessing", "unknown"}, {"splits", "unknown"}}},
            {"evaluation", {{"metrics", Json::array()}, {"protocol", "unknown"}}},
            {"implicit_decisions", Json::array()}};
}

Json MockBackend::review(const Json& p) const {
    const auto target = summary_tokens(p.value("target_summary", Json()));
    const int reviewer = p.value("reviewer", 0);
    struct Scored {
        std::string id;
        double score;
        std::size_t overlap;
    };
    std::vector<Scored> scored;
    for (const auto& c : p.value("candidates", Json::array())) {
        const auto id = c.at("paper_id").get<std::string>();
        const auto tokens = summary_tokens(c.value("summary", Json()));
        std::size_t overlap = 0;
        for (const auto& t : tokens) overlap += target.count(t);
        double score = static_cast<double>(overlap);
        if (profile_.reviewer_noise > 0.0) {
            std::seed_seq seq{seed_, static_cast<std::uint64_t>(reviewer), fnv1a(id)};
            std::mt19937_64 rng(seq);
            score += std::normal_distribution<double>(0.0, profile_.reviewer_noise)(rng);
        }
        scored.push_back({id, score, overlap});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    Json ranking = Json::array();
    for (std::size_t i = 0; i < scored.size(); ++i)
        ranking.push_back({{"paper_id", scored[i].id},
                           {"rank", static_cast<int>(i + 1)},
                           {"confidence", 1.0},
                           {"rationale", "shares " + std::to_string(scored[i].overlap) + " summary tokens with the target"},
                           {"evidence", Json::array({"token overlap " + std::to_string(scored[i].overlap)})}});
    return {{"ranking", ranking}, {"unknown", Json::array()}};
}

Json MockBackend::relate(const Json& p) const {
    const auto target = p.value("target_id", ""), neighbor = p.value("neighbor_id", "");
    const Json* script = lookup(profile_.relations, target, neighbor);
    if (!script) throw ConfigError("mock profile has no relation script for " + target + "|" + neighbor);
    return *script;
}

Json MockBackend::encapsulate(const Json& p) const {
    const auto neighbor = p.value("neighbor_id", ""), unit = p.value("unit_name", "");
    const Json* script = lookup(profile_.transforms, neighbor, unit);
    if (!script) throw ConfigError("mock profile has no transform script for " + neighbor + "|" + unit);
    std::string code = p.value("source_code", "");
    if (script->contains("code")) {
        code = (*script)["code"].get<std::string>();
    } else {
        for (const auto& pair : script->value("replace", Json::array())) {
            const auto from = pair.at(0).get<std::string>(), to = pair.at(1).get<std::string>();
            auto pos = code.find(from);
            if (pos == std::string::npos)
                throw ConfigError("transform script for " + neighbor + "|" + unit + " does not match the source");
            code.replace(pos, from.size(), to);
        }
    }
    return Json::array({{{"api_name", unit},
                         {"kind", "adapt"},
                         {"source", neighbor},
                         {"signature", "unknown"},
                         {"dependencies", Json::array()},
                         {"code", code},
                         {"notes", "applied diff_instruction: " + p.value("diff_instruction", "")}}});
}

Json MockBackend::advise(const Json& p) const {
    // agrees with the deterministic selection it is shown
    const Json computed = p.value("computed", Json::object());
    Json selected = Json::array(), deferred = Json::array();
    for (const auto& s : computed.value("selected", Json::array()))
        selected.push_back({{"unit_name", s.at("unit_name")},
                            {"chosen_api", s.at("chosen_api")},
                            {"score", s.at("score")},
                            {"reason", s.value("reason", "highest priority")},
                            {"alternatives", s.value("alternatives", Json::array())}});
    for (const auto& d : computed.value("deferred", Json::array()))
        deferred.push_back({{"unit_name", d.at("unit_name")}, {"reason", d.at("reason")}, {"next_step", d.value("next_step", "")}});
    return {{"selected", selected}, {"deferred", deferred}};
}

Json MockBackend::repair(const Json& p, bool orchestrator) const {
    const auto target = p.value("target_id", "");
    const int iteration = p.value("iteration", 1);
    Json plan;
    if (profile_.repair_mode == RepairMode::oracle) {
        auto it = profile_.oracle_trees.find(target);
        if (it == profile_.oracle_trees.end()) throw ConfigError("mock oracle has no official tree for " + target);
        const FileTree current = tree_of(p.value("files", Json::object()));
        Json edits = Json::array(), units = Json::array();
        for (const auto& [path, content] : it->second) {
            auto cur = current.find(path);
            if (cur != current.end() && cur->second == content) continue;
            if (cur == current.end())
                edits.push_back({{"file", path}, {"change_type", "add"}, {"diff", content}, {"risk", "low"}});
            else
                edits.push_back({{"file", path}, {"change_type", "modify"}, {"diff", full_rewrite_diff(cur->second, content)}, {"risk", "low"}});
            units.push_back(path);
        }
        if (edits.empty()) plan = noop_plan("implementation already matches");
        else
            plan = {{"diagnosis", "metrics differ from the reference"},
                    {"root_cause", "implementation deviates in " + std::to_string(edits.size()) + " file(s)"},
                    {"edit_units", units},
                    {"edits", edits},
                    {"expected_outcome", "metrics match the reference"},
                    {"fallback", "unknown"}};
    } else if (profile_.repair_mode == RepairMode::scripted) {
        const Json* plans = profile_.plans.contains(target) ? &profile_.plans[target]
                            : profile_.plans.contains("*") ? &profile_.plans["*"]
                                                             : nullptr;
        if (!plans) throw ConfigError("mock profile has no repair script for " + target);
        plan = iteration >= 1 && static_cast<std::size_t>(iteration) <= plans->size() ? (*plans)[iteration - 1]
                                                                                      : noop_plan("script exhausted");
    } else {
        plan = noop_plan("no repair scripted");
    }

    if (!orchestrator) return plan;
    Json actions = Json::array();
    for (const auto& e : plan.value("edits", Json::array()))
        actions.push_back({{"file", e.at("file")}, {"action", e.at("change_type") == "add" ? "create" : "modify"},
                           {"content_or_diff", e.at("diff")}});
    return {{"mode", "iterative_repair"},
            {"assumptions", Json::array({"unknown"})},
            {"plan", Json::array({plan.value("diagnosis", "unknown")})},
            {"files_to_create_or_modify", plan.value("edit_units", Json::array())},
            {"code_actions", actions},
            {"verification", Json::array({"re-run evaluation"})}};
}

Json MockBackend::induce(const Json& p) const {
    const auto epoch = std::to_string(p.value("epoch", 0)), subgraph = std::to_string(p.value("subgraph_id", 0));
    const Json* script = lookup(profile_.induction, epoch, subgraph);
    if (!script) throw ConfigError("mock profile has no induction script for " + epoch + "|" + subgraph);
    return *script;
}

Json MockBackend::inject(const Json& p) const {
    Json selected = Json::array(), context = Json::array();
    for (const auto& e : p.value("entries", Json::array())) {
        selected.push_back({{"pattern", e.at("pattern")},
                            {"trigger_match", "trigger: " + e.value("trigger", "unknown")},
                            {"action", e.at("action")},
                            {"priority", e.value("confidence", "unknown")},
                            {"evidence", e.value("frequency", "unknown") + ", " + e.value("confidence", "unknown")}});
        context.push_back(e.at("action"));
    }
    return {{"target_paper_id", p.value("target_paper_id", "unknown")},
            {"selected_entries", selected},
            {"rejected_entries", Json::array()},
            {"injected_context", context}};
}

} // namespace reprograph::agent
