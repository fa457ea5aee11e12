#include "reprograph/refine.hpp"

#include <algorithm>
#include <cmath>

#include "reprograph/diff.hpp"
#include "reprograph/error.hpp"

namespace reprograph::refine {

double performance_gap(const MetricVector& official, const MetricVector& generated) {
    if (official.empty()) throw ValidationError("performance_gap: no metrics");
    if (official.size() != generated.size()) throw ValidationError("performance_gap: metric-name mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < official.size(); ++i) {
        const auto& [name, p] = official.entries()[i];
        const auto& [gname, q] = generated.entries()[i];
        if (name != gname) throw ValidationError("performance_gap: metric-name mismatch ('" + name + "' vs '" + gname + "')");
        if (!(p >= 0.0) || !(q >= 0.0)) throw ValidationError("performance_gap: negative value for '" + name + "'");
        const double denom = std::max(p, q);
        if (denom > 0.0) sum += std::abs(p - q) / denom;
    }
    return sum / static_cast<double>(official.size()) * 100.0;
}

double feedback_gap(const MetricVector& official, const ExecutionFeedback& feedback) {
    MetricVector generated;
    for (const auto& [name, v] : official.entries()) {
        double value = 0.0;
        if (feedback.status == ExecStatus::ok && feedback.metrics)
            if (auto g = feedback.metrics->get(name)) value = *g;
        generated.set(name, value);
    }
    return performance_gap(official, generated);
}

std::string_view to_string(ChangeType c) {
    switch (c) {
        case ChangeType::add: return "add";
        case ChangeType::modify: return "modify";
        case ChangeType::remove: return "delete";
    }
    return "modify";
}

ChangeType change_type_from_string(std::string_view s) {
    if (s == "add" || s == "create") return ChangeType::add;
    if (s == "modify") return ChangeType::modify;
    if (s == "delete") return ChangeType::remove;
    throw ValidationError("unknown change_type '" + std::string(s) + "'");
}

namespace {

void check_path(const std::string& p) {
    if (p.empty() || p.front() == '/' || p.find('\\') != std::string::npos)
        throw ValidationError("edit path '" + p + "' is not a relative path");
    std::size_t start = 0;
    while (start <= p.size()) {
        auto slash = p.find('/', start);
        auto part = p.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
        if (part.empty() || part == "." || part == "..")
            throw ValidationError("edit path '" + p + "' has an invalid component");
        if (slash == std::string::npos) break;
        start = slash + 1;
    }
}

} // namespace

void RepairPlan::validate() const {
    if (edits.empty() && !no_op) throw ValidationError("repair plan has no edits and is not a declared no-op");
    for (const auto& e : edits) check_path(e.file);
}

FileTree apply_edits(const FileTree& tree, const std::vector<FileEdit>& edits) {
    FileTree out = tree;
    for (const auto& e : edits) {
        check_path(e.file);
        auto it = out.find(e.file);
        switch (e.change_type) {
            case ChangeType::add:
                if (it != out.end()) throw ValidationError("add: file '" + e.file + "' already exists");
                out[e.file] = is_unified_diff(e.diff) ? apply_unified_diff("", e.diff) : e.diff;
                break;
            case ChangeType::modify:
                if (it == out.end()) throw ValidationError("modify: file '" + e.file + "' does not exist");
                if (!is_unified_diff(e.diff)) throw ValidationError("malformed diff: modify of '" + e.file + "' is not a unified diff");
                it->second = apply_unified_diff(it->second, e.diff);
                break;
            case ChangeType::remove:
                if (it == out.end()) throw ValidationError("delete: file '" + e.file + "' does not exist");
                out.erase(it);
                break;
        }
    }
    return out;
}

RefinementState apply_plan(const RefinementState& state, const RepairPlan& plan) {
    if (state.k >= state.budget) throw ValidationError("apply_plan: iteration budget exhausted");
    plan.validate();
    RefinementState next = state;
    Implementation patched = state.code;
    patched.files = apply_edits(state.code.files, plan.edits);
    next.history.push_back({state.k, state.code, state.feedback, state.gap, plan});
    next.code = std::move(patched);
    next.feedback.reset();
    next.gap.reset();
    next.k = state.k + 1;
    return next;
}

Json to_json(const RepairPlan& p) {
    Json edits = Json::array();
    for (const auto& e : p.edits)
        edits.push_back({{"file", e.file}, {"change_type", std::string(to_string(e.change_type))}, {"diff", e.diff}, {"risk", e.risk}});
    Json j = {{"diagnosis", p.diagnosis},   {"root_cause", p.root_cause},
              {"edit_units", p.edit_units}, {"edits", edits},
              {"expected_outcome", p.expected_outcome}, {"fallback", p.fallback}};
    if (p.no_op) j["no_op"] = true;
    return j;
}

RepairPlan plan_from_json(const Json& j) {
    RepairPlan p;
    p.diagnosis = j.value("diagnosis", "");
    p.root_cause = j.value("root_cause", "");
    if (j.contains("edit_units")) p.edit_units = j["edit_units"].get<std::vector<std::string>>();
    for (const auto& e : j.at("edits"))
        p.edits.push_back({e.at("file").get<std::string>(), change_type_from_string(e.at("change_type").get<std::string>()),
                           e.value("diff", ""), e.value("risk", "low")});
    p.expected_outcome = j.value("expected_outcome", "");
    p.fallback = j.value("fallback", "");
    p.no_op = j.value("no_op", false);
    return p;
}

Json to_json(const Attempt& a) {
    return {{"iteration", a.iteration},
            {"code", to_json(a.code)},
            {"feedback", a.feedback ? to_json(*a.feedback) : Json(nullptr)},
            {"gap", a.gap ? Json(*a.gap) : Json(nullptr)},
            {"plan", a.plan ? to_json(*a.plan) : Json(nullptr)}};
}

Attempt attempt_from_json(const Json& j) {
    Attempt a;
    a.iteration = j.at("iteration").get<int>();
    a.code = implementation_from_json(j.at("code"));
    if (!j.at("feedback").is_null()) a.feedback = feedback_from_json(j["feedback"]);
    if (!j.at("gap").is_null()) a.gap = j["gap"].get<double>();
    if (!j.at("plan").is_null()) a.plan = plan_from_json(j["plan"]);
    return a;
}

Json to_json(const RefinementResult& r) {
    Json history = Json::array();
    for (const auto& a : r.history) history.push_back(to_json(a));
    return {{"best", to_json(r.best)},
            {"best_gap", r.best_gap},
            {"best_iteration", r.best_iteration},
            {"best_feedback", to_json(r.best_feedback)},
            {"final_feedback", to_json(r.final_feedback)},
            {"history", history},
            {"executions", r.executions},
            {"converged", r.converged},
            {"aborted", r.aborted},
            {"abort_reason", r.abort_reason}};
}

RefinementResult refinement_from_json(const Json& j) {
    RefinementResult r;
    r.best = implementation_from_json(j.at("best"));
    r.best_gap = j.at("best_gap").get<double>();
    r.best_iteration = j.at("best_iteration").get<int>();
    r.best_feedback = feedback_from_json(j.at("best_feedback"));
    r.final_feedback = feedback_from_json(j.at("final_feedback"));
    for (const auto& a : j.at("history")) r.history.push_back(attempt_from_json(a));
    r.executions = j.at("executions").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.aborted = j.at("aborted").get<bool>();
    r.abort_reason = j.at("abort_reason").get<std::string>();
    return r;
}

RefinementResult run_refinement(const Implementation& initial, Executor& executor, RepairAgent& agent,
                                const MetricVector& official, const RefinementOptions& options) {
    if (options.budget < 1) throw ConfigError("run_refinement: budget must be >= 1");
    if (!(options.threshold >= 0.0 && options.threshold <= 100.0))
        throw ConfigError("run_refinement: threshold must be a percentage in [0,100]");

    RefinementState state;
    state.code = initial;
    state.budget = options.budget;
    state.threshold = options.threshold;

    RefinementResult result;
    auto execute = [&] {
        ExecRequest req{options.target_id, state.k, options.timeout_seconds};
        auto fb = executor.execute(state.code, req);
        fb.validate();
        state.feedback = fb;
        state.gap = feedback_gap(official, fb);
        ++result.executions;
        if (result.executions == 1 || *state.gap < result.best_gap) {
            result.best = state.code;
            result.best_gap = *state.gap;
            result.best_iteration = state.k;
            result.best_feedback = fb;
        }
    };

    execute();
    while (!(*state.gap < state.threshold) && state.k < state.budget) {
        RepairRequest req;
        req.target_id = options.target_id;
        req.paper_text = options.paper_text;
        req.code = &state.code;
        req.feedback = &*state.feedback;
        req.official = &official;
        req.gap = *state.gap;
        req.iteration = state.k;
        req.injected_context = options.injected_context;

        std::optional<RepairPlan> plan;
        try {
            plan = agent.propose(req);
            if (!plan) {
                result.aborted = true;
                result.abort_reason = "repair agent produced no usable plan";
            }
        } catch (const std::exception& e) {
            result.aborted = true;
            result.abort_reason = std::string("repair agent failed: ") + e.what();
        }
        if (result.aborted) break;

        try {
            state = apply_plan(state, *plan);
        } catch (const ValidationError& e) {
            result.aborted = true;
            result.abort_reason = std::string("repair plan could not be applied: ") + e.what();
            break;
        }
        execute();
    }

    result.converged = result.best_gap < options.threshold;
    result.final_feedback = *state.feedback;
    result.history = state.history;
    result.history.push_back({state.k, state.code, state.feedback, state.gap, std::nullopt});
    return result;
}

} // namespace reprograph::refine
