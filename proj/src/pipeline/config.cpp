#include <cmath>
#include <fstream>

#include "reprograph/error.hpp"
#include "reprograph/pipeline.hpp"

namespace reprograph::pipeline {

void RunConfig::validate() const {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    need(!graph_file.empty(), "a graph file is required");
    need(reviewers >= 1, "reviewers must be >= 1");
    need(lambda >= 0.0 && std::isfinite(lambda), "lambda must be >= 0");
    need(k_keep >= 1, "k_keep must be >= 1");
    need(beta >= 0.0 && std::isfinite(beta), "beta must be >= 0");
    need(budget >= 0, "budget must be >= 0");
    need(threshold >= 0.0 && threshold <= 100.0, "threshold must lie in [0, 100]");
    need(attempts >= 1, "attempts must be >= 1");
    need(timeout_seconds > 0.0, "timeout must be positive");
    need(eta_fraction > 0.0 && eta_fraction <= 1.0, "eta fraction must lie in (0, 1]");
    need(epochs >= 1, "epochs must be >= 1");
    need(top_k >= 1, "top_k must be >= 1");
    need(min_val_runs >= 1, "min_val_runs must be >= 1");
    need(injection_passes >= 0, "injection passes must be >= 0");
    need(workers >= 1, "workers must be >= 1");
    need(retries >= 0, "retries must be >= 0");
    need(max_in_flight >= 1, "max in-flight calls must be >= 1");
    if (backend == BackendKind::mock) need(seed.has_value(), "mock runs need an explicit seed");
    if (backend == BackendKind::live) need(!live.base_url.empty() && !live.model.empty(), "live backend needs base_url and model");
    if (executor == ExecutorKind::sandbox) need(!runner.empty(), "sandbox executor needs a runner command");
}

Json to_json(const RunConfig& c) {
    return {{"graph", c.graph_file.generic_string()},
            {"targets", c.targets},
            {"backend", c.backend == BackendKind::mock ? "mock" : "live"},
            {"mock_profile", c.mock_profile.generic_string()},
            {"mock_oracle", c.mock_oracle},
            {"model", c.live.model},
            {"retries", c.retries},
            {"reviewers", c.reviewers},
            {"lambda", c.lambda},
            {"k_keep", c.k_keep},
            {"beta", c.beta},
            {"budget", c.budget},
            {"threshold", c.threshold},
            {"attempts", c.attempts},
            {"timeout", c.timeout_seconds},
            {"eta_fraction", c.eta_fraction},
            {"epochs", c.epochs},
            {"top_k", c.top_k},
            {"min_val_runs", c.min_val_runs},
            {"injection_passes", c.injection_passes},
            {"knowledge", c.knowledge.generic_string()},
            {"seed", c.seed ? Json(*c.seed) : Json(nullptr)},
            {"executor", c.executor == ExecutorKind::reference ? "reference" : "sandbox"},
            {"callability", c.callability == CallabilityKind::static_check ? "static" : "executor"}};
}

CodeSource code_source_breakdown(const Implementation& manifest) {
    double reuse = 0, adapt = 0, fresh = 0;
    for (const auto& u : manifest.units) {
        auto it = manifest.files.find(u.file);
        const double lines = it == manifest.files.end() ? 0.0 : static_cast<double>(count_lines(it->second));
        (u.kind == UnitKind::reuse ? reuse : u.kind == UnitKind::adapt ? adapt : fresh) += lines;
    }
    const double total = reuse + adapt + fresh;
    if (total <= 0.0) return {};
    return {100.0 * reuse / total, 100.0 * adapt / total, 100.0 * fresh / total, false};
}

Json to_json(const TargetReport& r) {
    return {{"target_id", r.target_id},
            {"initial_gap", r.initial_gap},
            {"refined_gap", r.refined_gap},
            {"final_gap", r.final_gap},
            {"code_source", {{"reuse", r.code_source.reuse}, {"adapt", r.code_source.adapt}, {"new", r.code_source.fresh}, {"empty", r.code_source.empty}}},
            {"iterations", r.iterations},
            {"attempt_gaps", r.attempt_gaps},
            {"best_attempt", r.best_attempt},
            {"converged", r.converged},
            {"neighborhood", r.neighborhood},
            {"knowledge_subgraphs", r.knowledge_subgraphs},
            {"knowledge_entries", r.knowledge_entries},
            {"transcripts", r.transcripts},
            {"transcript_count", r.transcript_count},
            {"warnings", r.warnings}};
}

TargetReport target_report_from_json(const Json& j) {
    TargetReport r;
    r.target_id = j.at("target_id").get<std::string>();
    r.initial_gap = j.at("initial_gap").get<double>();
    r.refined_gap = j.at("refined_gap").get<double>();
    r.final_gap = j.at("final_gap").get<double>();
    const auto& cs = j.at("code_source");
    r.code_source = {cs.at("reuse").get<double>(), cs.at("adapt").get<double>(), cs.at("new").get<double>(), cs.value("empty", false)};
    r.iterations = j.at("iterations").get<int>();
    r.attempt_gaps = j.at("attempt_gaps").get<std::vector<double>>();
    r.best_attempt = j.at("best_attempt").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.neighborhood = j.at("neighborhood").get<std::vector<std::string>>();
    r.knowledge_subgraphs = j.at("knowledge_subgraphs").get<std::vector<int>>();
    r.knowledge_entries = j.at("knowledge_entries").get<std::size_t>();
    r.transcripts = j.at("transcripts").get<std::string>();
    r.transcript_count = j.at("transcript_count").get<std::size_t>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
}

Json to_json(const RunReport& r) {
    Json targets = Json::array();
    for (const auto& t : r.targets) targets.push_back(to_json(t));
    return {{"targets", targets}};
}

RunReport run_report_from_json(const Json& j) {
    RunReport r;
    for (const auto& t : j.at("targets")) r.targets.push_back(target_report_from_json(t));
    return r;
}

FileTree load_code_tree(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("code directory " + dir.string() + " does not exist");
    FileTree tree;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    for (const auto& p : files) {
        const auto rel = fs::relative(p, dir).generic_string();
        if (rel == "reference_metrics.json") continue;
        std::ifstream in(p, std::ios::binary);
        tree[rel] = std::string(std::istreambuf_iterator<char>(in), {});
    }
    return tree;
}

MetricVector load_reference_metrics(const fs::path& dir) {
    const auto path = dir / "reference_metrics.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("no reference metrics at " + path.string());
    try {
        return metrics_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

namespace {

Json read_json(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    return Json::parse(in);
}

} // namespace

std::vector<std::string> verify_report(const fs::path& output_dir) {
    std::vector<std::string> problems;
    const auto report = run_report_from_json(read_json(output_dir / "report.json"));
    for (const auto& t : report.targets) {
        const auto dir = output_dir / t.target_id / "metrics";
        const auto official = metrics_from_json(read_json(dir / "official.json"));
        for (const auto& [name, value] : std::vector<std::pair<std::string, double>>{
                 {"initial", t.initial_gap}, {"refined", t.refined_gap}, {"final", t.final_gap}}) {
            const auto fb = feedback_from_json(read_json(dir / (name + ".json")));
            const double gap = refine::feedback_gap(official, fb);
            if (std::abs(gap - value) > 1e-9)
                problems.push_back(t.target_id + ": " + name + " gap " + std::to_string(value) + " but metrics give " +
                                   std::to_string(gap));
            if (value < 0.0 || value > 100.0) problems.push_back(t.target_id + ": " + name + " gap outside [0, 100]");
        }
        if (!t.code_source.empty) {
            const double sum = t.code_source.reuse + t.code_source.adapt + t.code_source.fresh;
            if (std::abs(sum - 100.0) > 0.1) problems.push_back(t.target_id + ": code-source shares sum to " + std::to_string(sum));
        }
    }
    return problems;
}

} // namespace reprograph::pipeline
