#include <algorithm>
#include <fstream>
#include <sstream>

#include "reprograph/agent/adapters.hpp"
#include "reprograph/error.hpp"
#include "reprograph/pipeline.hpp"
#include "workers.hpp"

namespace reprograph::pipeline {

namespace {

void write_json(const fs::path& path, const Json& j) {
    fs::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        out << j.dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

Json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return Json::parse(in);
}

bool is_done(const fs::path& dir) { return fs::exists(dir / ".done"); }

void mark_done(const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream(dir / ".done") << "done\n";
}

std::size_t count_file_lines(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
}

// Wraps anything but configuration errors into a failure of the named stage.
template <class F>
auto staged(const std::string& stage, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const StageFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw StageFailure(stage, e.what());
    }
}

struct OwningCallability : relation::CallabilityBackend {
    OwningCallability(std::unique_ptr<Executor> ex, double timeout) : executor(std::move(ex)), inner(*executor, timeout) {}
    relation::CallabilityCheck check(const relation::ApiUnit& unit) override { return inner.check(unit); }
    std::unique_ptr<Executor> executor;
    relation::ExecutorCallabilityBackend inner;
};

} // namespace

struct Engine::Context {
    explicit Context(fs::path log_path) : log(std::move(log_path)) {}
    agent::TranscriptLog log;
};

Engine::Engine(RunConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (!fs::exists(cfg_.graph_file)) throw ConfigError("graph file not found: " + cfg_.graph_file.string());
    graph_ = load_graph(cfg_.graph_file);
    graph_dir_ = cfg_.graph_file.has_parent_path() ? cfg_.graph_file.parent_path() : fs::path(".");

    agent::Backend* backend = nullptr;
    if (cfg_.backend == BackendKind::mock) {
        auto profile = cfg_.mock_profile.empty() ? agent::MockProfile{} : agent::load_profile(cfg_.mock_profile);
        if (cfg_.mock_oracle) {
            profile.repair_mode = agent::RepairMode::oracle;
            for (const auto& n : graph_.nodes())
                if (has_code(n.id)) profile.oracle_trees[n.id] = code_of(n.id);
        }
        mock_ = std::make_unique<agent::MockBackend>(*cfg_.seed, std::move(profile));
        backend = mock_.get();
    } else {
        http_ = std::make_unique<agent::HttpChatBackend>(cfg_.live);
        backend = http_.get();
    }
    bounded_ = std::make_unique<agent::BoundedBackend>(*backend, cfg_.max_in_flight);
    write_json(cfg_.output_dir / "run_config.json", to_json(cfg_));
}

Engine::~Engine() = default;

bool Engine::has_code(const std::string& id) const {
    const auto& n = graph_.node(id);
    return n.code_ref && fs::is_directory(graph_dir_ / *n.code_ref);
}

FileTree Engine::code_of(const std::string& id) const {
    if (!has_code(id)) throw ConfigError("paper '" + id + "' has no code directory");
    return load_code_tree(graph_dir_ / *graph_.node(id).code_ref);
}

MetricVector Engine::official_metrics(const std::string& id) const {
    const auto& n = graph_.node(id);
    if (has_code(id) && fs::exists(graph_dir_ / *n.code_ref / "reference_metrics.json"))
        return load_reference_metrics(graph_dir_ / *n.code_ref);
    if (n.extra.contains("reference_metrics")) return metrics_from_json(n.extra["reference_metrics"]);
    throw ConfigError("paper '" + id + "' has no reference metrics");
}

std::vector<std::string> Engine::candidate_neighbors(const std::string& target) const {
    std::vector<std::string> out;
    for (const auto& id : graph_.neighbor_ids(target))
        if (has_code(id)) out.push_back(id);
    return out;
}

Engine::Context& Engine::context_for(const std::string& key) {
    std::lock_guard lock(mu_);
    auto& slot = contexts_[key];
    if (!slot) slot = std::make_unique<Context>(cfg_.output_dir / key / "transcripts.jsonl");
    return *slot;
}

agent::AgentClient Engine::client(const std::string& key) {
    return agent::AgentClient(*bounded_, &context_for(key).log, cfg_.retries);
}

void Engine::check_fault(const std::string& stage) const {
    if (cfg_.fail_before_stage && *cfg_.fail_before_stage == stage) throw StageFailure(stage, "injected fault");
}

namespace {

SandboxOptions sandbox_options(const std::vector<std::string>& runner, const fs::path& scratch) {
    SandboxOptions o;
    o.runner = runner;
    o.scratch_root = scratch;
    return o;
}

} // namespace

std::unique_ptr<Executor> Engine::executor_for(const std::string& target, const fs::path& scratch) const {
    if (cfg_.executor == ExecutorKind::sandbox) return std::make_unique<SandboxExecutor>(sandbox_options(cfg_.runner, scratch));
    if (!has_code(target))
        throw ConfigError("the reference executor needs official code for '" + target + "'; use the sandbox executor");
    return std::make_unique<ReferenceExecutor>(code_of(target), official_metrics(target));
}

std::unique_ptr<relation::CallabilityBackend> Engine::callability_backend(const FileTree& neighbor,
                                                                        const fs::path& scratch) const {
    if (cfg_.callability == CallabilityKind::static_check)
        return std::make_unique<relation::StaticCallabilityChecker>(relation::provided_modules(neighbor));
    return std::make_unique<OwningCallability>(std::make_unique<SandboxExecutor>(sandbox_options(cfg_.runner, scratch)),
                                               std::min(cfg_.timeout_seconds, 600.0));
}

refine::RefinementOptions Engine::refine_options(const std::string& target, const std::vector<std::string>& injected,
                                                 int budget) const {
    refine::RefinementOptions o;
    o.target_id = target;
    o.paper_text = graph_.node(target).method_experiments();
    o.budget = budget < 0 ? cfg_.budget : budget;
    o.threshold = cfg_.threshold;
    o.timeout_seconds = cfg_.timeout_seconds;
    o.injected_context = injected;
    return o;
}

Engine::PruneStage Engine::prune(const std::string& target) {
    if (!graph_.contains(target)) throw ValidationError("unknown target '" + target + "'");
    const auto dir = cfg_.output_dir / target / "ssgp";
    if (is_done(dir))
        return {ssgp::neighborhood_from_json(read_json(dir / "neighborhood.json")),
                read_json(dir / "warnings.json").get<std::vector<std::string>>()};
    check_fault("ssgp");
    return staged("ssgp", [&] {
        PruneStage out;
        out.neighborhood.target_id = target;
        auto agents = client(target);
        const auto candidates = candidate_neighbors(target);
        Json summaries = Json::object();
        summaries[target] = agent::summarize_paper(agents, graph_.node(target));
        if (candidates.empty()) {
            out.warnings.push_back("no code-bearing neighbors; continuing on the refinement-only path");
        } else {
            std::vector<agent::Candidate> shown;
            for (const auto& id : candidates) {
                summaries[id] = agent::summarize_paper(agents, graph_.node(id));
                shown.push_back({id, summaries[id]});
            }
            auto ballots = agent::collect_ballots(agents, summaries[target], shown, cfg_.reviewers, *cfg_.seed);
            auto aggregates = ssgp::aggregate_ranks(ballots, cfg_.lambda);
            auto kept = ssgp::prune(aggregates, cfg_.k_keep);
            out.neighborhood = ssgp::edge_weights(target, kept);
            Json b = Json::array(), a = Json::array();
            for (const auto& x : ballots) b.push_back(ssgp::to_json(x));
            for (const auto& x : aggregates) a.push_back(ssgp::to_json(x));
            write_json(dir / "ballots.json", b);
            write_json(dir / "aggregates.json", a);
        }
        write_json(dir / "summaries.json", summaries);
        write_json(dir / "neighborhood.json", ssgp::to_json(out.neighborhood));
        write_json(dir / "warnings.json", out.warnings);
        mark_done(dir);
        return out;
    });
}

Engine::AggregateStage Engine::aggregate(const std::string& target, const ssgp::WeightedNeighborhood& n) {
    const auto dir = cfg_.output_dir / target / "relation";
    if (is_done(dir))
        return {implementation_from_json(read_json(dir / "implementation.json")), read_json(dir / "aggregation.json"),
                read_json(dir / "warnings.json").get<std::vector<std::string>>()};
    check_fault("relation");
    return staged("relation", [&] {
        AggregateStage out;
        auto agents = client(target);
        agent::AgentTransformer transformer(agents);
        relation::TreeCodeProvider provider;
        relation::CandidateMap candidates;
        Json annotations = Json::array(), units_json = Json::array();

        std::vector<ssgp::NeighborWeight> members = n.members;
        std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.candidate_id < b.candidate_id; });
        for (const auto& m : members) {
            const auto tree = code_of(m.candidate_id);
            provider.add(m.candidate_id, tree);
            auto checker = callability_backend(tree, dir / "callability" / m.candidate_id);
            try {
                auto annotation = agent::analyze_relation(agents, graph_.node(target), graph_.node(m.candidate_id), tree);
                annotations.push_back(relation::to_json(annotation));
                auto units = relation::encapsulate(annotation, provider, transformer);
                for (auto& u : units) {
                    u = relation::validate_callability(u, *checker);
                    units_json.push_back(relation::to_json(u));
                }
                relation::add_candidates(candidates, units, m.weight);
            } catch (const agent::AgentCallFailed& e) {
                out.warnings.push_back("neighbor " + m.candidate_id + " skipped: " + e.what());
            } catch (const ValidationError& e) {
                out.warnings.push_back("neighbor " + m.candidate_id + " skipped: " + e.what());
            }
        }

        Json advisory = Json::object();
        if (candidates.empty()) {
            out.aggregation = {{"selected", Json::array()}, {"deferred", Json::array()}, {"warnings", Json::array()}};
            if (!n.members.empty()) out.warnings.push_back("neighbors yielded no implementation units");
        } else {
            const auto result = relation::aggregate_neighborhood(candidates, cfg_.beta);
            out.aggregation = relation::to_json(result);
            out.initial = relation::assemble(result);
            for (const auto& w : result.warnings) out.warnings.push_back(w);
            try {
                advisory = agent::advise_aggregation(agents, candidates, n, cfg_.beta, result);
                for (const auto& s : advisory["selected"]) {
                    auto it = result.selections.find(relation::normalize_unit_name(s["unit_name"].get<std::string>()));
                    if (it == result.selections.end() || it->second.chosen.api_name != s["chosen_api"].get<std::string>())
                        out.warnings.push_back("advisor disagrees on unit " + s["unit_name"].get<std::string>());
                }
            } catch (const agent::AgentCallFailed& e) {
                out.warnings.push_back(std::string("aggregation advisor unavailable: ") + e.what());
            }
        }
        write_json(dir / "annotations.json", annotations);
        write_json(dir / "api_units.json", units_json);
        write_json(dir / "aggregation.json", out.aggregation);
        write_json(dir / "advisory.json", advisory);
        write_json(dir / "implementation.json", to_json(out.initial));
        write_json(dir / "warnings.json", out.warnings);
        mark_done(dir);
        return out;
    });
}

refine::RefinementResult Engine::refine(const std::string& target, const Implementation& initial,
                                        const std::string& stage_dir, const std::vector<std::string>& injected,
                                        int budget) {
    const auto dir = cfg_.output_dir / target / stage_dir;
    if (is_done(dir)) return refine::refinement_from_json(read_json(dir / "result.json"));
    const std::string stage = stage_dir.substr(0, stage_dir.find('/'));
    check_fault(stage);
    return staged(stage, [&] {
        auto executor = executor_for(target, dir / "sandbox");
        auto agents = client(target);
        agent::AgentRepairAgent repair(agents);
        auto result = refine::run_refinement(initial, *executor, repair, official_metrics(target),
                                             refine_options(target, injected, budget));
        write_json(dir / "result.json", refine::to_json(result));
        mark_done(dir);
        return result;
    });
}

TargetReport Engine::reproduce(const std::string& target) {
    TargetReport report;
    report.target_id = target;

    const auto pruned = prune(target);
    const auto aggregated = aggregate(target, pruned.neighborhood);
    report.warnings = pruned.warnings;
    report.warnings.insert(report.warnings.end(), aggregated.warnings.begin(), aggregated.warnings.end());
    for (const auto& m : pruned.neighborhood.members) report.neighborhood.push_back(m.candidate_id);

    std::vector<refine::RefinementResult> attempts;
    for (int a = 0; a < cfg_.attempts; ++a)
        attempts.push_back(refine(target, aggregated.initial, "refine/attempt_" + std::to_string(a)));
    std::size_t best = 0;
    for (std::size_t a = 0; a < attempts.size(); ++a) {
        report.attempt_gaps.push_back(attempts[a].best_gap);
        if (attempts[a].best_gap < attempts[best].best_gap) best = a;
    }
    const auto& refined = attempts[best];
    report.best_attempt = static_cast<int>(best);
    report.initial_gap = refined.history.front().gap.value_or(100.0);
    report.refined_gap = refined.best_gap;
    report.iterations = refined.best_iteration;
    for (const auto& a : attempts)
        if (a.aborted) report.warnings.push_back("an attempt aborted: " + a.abort_reason);

    // knowledge retrieval + one bounded injection pass
    Implementation final_impl = refined.best;
    ExecutionFeedback final_fb = refined.best_feedback;
    double final_gap = refined.best_gap;
    const auto inject_dir = cfg_.output_dir / target / "inject";
    Json summary;
    if (cfg_.knowledge.empty()) {
        report.warnings.push_back("no knowledge checkpoint configured; injection pass skipped");
    } else if (is_done(inject_dir)) {
        summary = read_json(inject_dir / "summary.json");
    } else {
        check_fault("inject");
        summary = staged("inject", [&] {
            Json s = {{"subgraphs", Json::array()}, {"entries", Json::array()}, {"injected_context", Json::array()},
                      {"warnings", Json::array()}, {"ran", false}};
            const auto manifest = induction::checkpoint_from_json(read_json(cfg_.knowledge));
            std::map<int, induction::KnowledgeBase> bases;
            const auto base_dir = cfg_.knowledge.parent_path();
            for (const auto& r : manifest.records)
                if (r.epoch == manifest.best_epoch) bases[r.subgraph] = induction::load_knowledge_base(base_dir / r.file);
            const auto affinity = induction::subgraph_affinity(pruned.neighborhood, manifest.partition);
            const auto retrieval = induction::retrieve_knowledge(affinity, bases, cfg_.top_k);
            s["subgraphs"] = retrieval.subgraphs;
            for (const auto& w : retrieval.warnings) s["warnings"].push_back(w);
            for (const auto& e : retrieval.entries) s["entries"].push_back(induction::to_json(e));
            if (retrieval.entries.empty()) {
                s["warnings"].push_back("no knowledge retrieved; injection pass skipped");
            } else if (cfg_.injection_passes == 0) {
                s["warnings"].push_back("injection passes set to 0; pass skipped");
            } else {
                auto agents = client(target);
                const auto summaries = read_json(cfg_.output_dir / target / "ssgp" / "summaries.json");
                const auto package = agent::inject_knowledge(agents, target, summaries.at(target), refined.best, retrieval.entries);
                s["injected_context"] = package.injected_context;
                s["ran"] = !package.injected_context.empty();
            }
            write_json(inject_dir / "summary.json", s);
            mark_done(inject_dir);
            return s;
        });
    }
    if (!summary.is_null()) {
        for (const auto& w : summary["warnings"]) report.warnings.push_back(w.get<std::string>());
        report.knowledge_subgraphs = summary["subgraphs"].get<std::vector<int>>();
        report.knowledge_entries = summary["entries"].size();
        if (summary["ran"].get<bool>()) {
            auto injected = refine(target, refined.best, "inject/refine",
                                   summary["injected_context"].get<std::vector<std::string>>(), cfg_.injection_passes);
            final_impl = injected.best;
            final_fb = injected.best_feedback;
            final_gap = injected.best_gap;
        }
    }
    report.final_gap = final_gap;
    report.converged = final_gap < cfg_.threshold;
    report.code_source = code_source_breakdown(final_impl);
    if (report.code_source.empty) report.warnings.push_back("final manifest has no unit code; code-source breakdown is empty");

    const auto tdir = cfg_.output_dir / target;
    write_json(tdir / "final" / "implementation.json", to_json(final_impl));
    materialize(final_impl.files, tdir / "final" / "files");
    write_json(tdir / "metrics" / "official.json", to_json(official_metrics(target)));
    write_json(tdir / "metrics" / "initial.json", to_json(*refined.history.front().feedback));
    write_json(tdir / "metrics" / "refined.json", to_json(refined.best_feedback));
    write_json(tdir / "metrics" / "final.json", to_json(final_fb));

    report.transcripts = target + "/transcripts.jsonl";
    report.transcript_count = count_file_lines(cfg_.output_dir / report.transcripts);
    write_json(tdir / "report.json", to_json(report));
    return report;
}

RunReport Engine::reproduce_all() {
    std::vector<std::string> targets = cfg_.targets;
    if (targets.empty())
        for (const auto& n : graph_.nodes())
            if (n.split == Split::test) targets.push_back(n.id);
    std::sort(targets.begin(), targets.end());
    if (targets.empty()) throw ConfigError("no targets given and the graph has no test papers");

    RunReport report;
    report.targets.resize(targets.size());
    parallel_for(targets.size(), cfg_.workers, [&](std::size_t i) { report.targets[i] = reproduce(targets[i]); });
    write_json(cfg_.output_dir / "report.json", to_json(report));
    return report;
}

induction::Outcome Engine::reproduce_quick(const std::string& target, const std::vector<std::string>& injected) {
    const auto pruned = prune(target);
    const auto aggregated = aggregate(target, pruned.neighborhood);
    return staged("refine", [&] {
        auto executor = executor_for(target, cfg_.output_dir / target / "scratch");
        auto agents = client(target);
        agent::AgentRepairAgent repair(agents);
        auto result = refine::run_refinement(aggregated.initial, *executor, repair, official_metrics(target),
                                             refine_options(target, injected, -1));
        return induction::Outcome{target, result.best, result.best_feedback, result.best_gap};
    });
}

} // namespace reprograph::pipeline
