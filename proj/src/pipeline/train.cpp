#include <algorithm>
#include <fstream>
#include <numeric>
#include <functional>

#include "reprograph/agent/adapters.hpp"
#include "reprograph/error.hpp"
#include "reprograph/louvain.hpp"
#include "reprograph/pipeline.hpp"
#include "workers.hpp"

namespace reprograph::pipeline {

namespace {

std::vector<std::string> actions_of(const std::vector<induction::KnowledgeEntry>& entries) {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.action);
    return out;
}

double mean(const std::vector<double>& xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Gain of an entry on each validation paper: baseline gap minus the gap with
// the entry's action injected. Baselines are computed once.
class ReproductionValidation : public induction::ValidationHarness {
public:
    ReproductionValidation(std::vector<std::string> papers, std::function<double(const std::string&, const std::vector<std::string>&)> run)
        : papers_(std::move(papers)), run_(std::move(run)) {}

    std::vector<double> evaluate(const induction::KnowledgeEntry& entry, int) override {
        std::vector<double> gains;
        for (const auto& p : papers_) {
            auto it = baseline_.find(p);
            if (it == baseline_.end()) it = baseline_.emplace(p, run_(p, {})).first;
            gains.push_back(it->second - run_(p, {entry.action}));
        }
        return gains;
    }

private:
    std::vector<std::string> papers_;
    std::function<double(const std::string&, const std::vector<std::string>&)> run_;
    std::map<std::string, double> baseline_;
};

void write_json_file(const fs::path& path, const Json& j) {
    fs::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << j.dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

} // namespace

induction::TaskGraph Engine::task_graph() {
    std::vector<std::string> members;
    for (const auto& n : graph_.nodes())
        if (n.split == Split::train && has_code(n.id)) members.push_back(n.id);
    std::sort(members.begin(), members.end());
    if (members.size() < 2) throw ValidationError("training needs at least two code-bearing train papers");

    std::map<std::pair<std::string, std::string>, double> directed;
    for (const auto& m : members)
        for (const auto& w : prune(m).neighborhood.members)
            if (std::binary_search(members.begin(), members.end(), w.candidate_id) && w.candidate_id != m)
                directed[{m, w.candidate_id}] = w.weight;
    return induction::TaskGraph::from_directed("reproduction", members, directed);
}

induction::CheckpointManifest Engine::train_knowledge(induction::ValidationHarness* override_harness) {
    const auto tg = task_graph();
    const auto& members = tg.members();
    std::vector<std::string> validation;
    for (const auto& n : graph_.nodes())
        if (n.split == Split::validation && (has_code(n.id) || cfg_.executor == ExecutorKind::sandbox))
            validation.push_back(n.id);
    std::sort(validation.begin(), validation.end());

    induction::CheckpointManifest manifest;
    manifest.partition = induction::louvain_partition(tg, cfg_.seed.value_or(0));
    if (validation.empty())
        manifest.warnings.push_back("no validation papers; epoch selection falls back to training gaps");

    const auto kb_dir = cfg_.output_dir / "kb";
    auto gap_of = [this](const std::string& p, const std::vector<std::string>& injected) {
        return reproduce_quick(p, injected).gap.value_or(100.0);
    };
    ReproductionValidation default_harness(validation, gap_of);
    induction::ValidationHarness& harness = override_harness ? *override_harness : default_harness;

    std::map<int, std::vector<induction::KnowledgeEntry>> accumulated;
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
        std::vector<induction::Outcome> outcomes(members.size());
        parallel_for(members.size(), cfg_.workers, [&](std::size_t i) {
            const int j = manifest.partition.index_of(members[i]);
            outcomes[i] = reproduce_quick(members[i], j < 0 ? std::vector<std::string>{} : actions_of(accumulated[j]));
        });

        std::map<int, induction::KnowledgeBase> bases;
        auto agents = client("kb");
        agent::AgentInductor inductor(agents, tg.task_name());
        for (std::size_t j = 0; j < manifest.partition.subgraphs.size(); ++j) {
            const auto& sub = manifest.partition.subgraphs[j];
            std::vector<induction::Outcome> local;
            for (std::size_t i = 0; i < members.size(); ++i)
                if (std::binary_search(sub.begin(), sub.end(), members[i])) local.push_back(outcomes[i]);
            induction::InductionOptions opts{induction::eta_for(sub.size(), cfg_.eta_fraction), cfg_.min_val_runs};
            auto kb = induction::induce_knowledge(static_cast<int>(j), epoch, sub, local, inductor, harness, opts);

            // a later epoch refreshes entries with the same (pattern, action)
            auto& acc = accumulated[static_cast<int>(j)];
            for (const auto& e : kb.entries) {
                auto same = std::find_if(acc.begin(), acc.end(),
                                         [&](const auto& a) { return a.pattern == e.pattern && a.action == e.action; });
                if (same != acc.end()) *same = e;
                else acc.push_back(e);
            }
            kb.entries = acc;
            bases[static_cast<int>(j)] = kb;
        }

        std::vector<double> gaps;
        if (validation.empty()) {
            for (const auto& o : outcomes) gaps.push_back(o.gap.value_or(100.0));
        } else {
            for (const auto& v : validation) {
                const auto affinity = induction::subgraph_affinity(prune(v).neighborhood, manifest.partition);
                const auto retrieved = induction::retrieve_knowledge(affinity, bases, cfg_.top_k);
                gaps.push_back(gap_of(v, actions_of(retrieved.entries)));
            }
        }
        const double val_gap = mean(gaps);
        manifest.epoch_val_gap[epoch] = val_gap;
        for (const auto& [j, kb] : bases) {
            const std::string file = "epoch_" + std::to_string(epoch) + "/subgraph_" + std::to_string(j) + ".json";
            induction::save_knowledge_base(kb, kb_dir / file);
            manifest.records.push_back({epoch, j, file, val_gap});
        }
    }
    manifest.best_epoch = induction::select_best_epoch(manifest.epoch_val_gap);
    write_json_file(kb_dir / "checkpoint.json", induction::to_json(manifest));
    return manifest;
}

} // namespace reprograph::pipeline
