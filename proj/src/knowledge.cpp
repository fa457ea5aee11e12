#include "reprograph/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "reprograph/error.hpp"

namespace reprograph::induction {

std::string_view to_string(Confidence c) {
    switch (c) {
        case Confidence::low: return "low";
        case Confidence::medium: return "medium";
        case Confidence::high: return "high";
    }
    return "low";
}

Confidence confidence_from_string(std::string_view s) {
    if (s == "low" || is_unknown(s)) return Confidence::low;
    if (s == "medium") return Confidence::medium;
    if (s == "high") return Confidence::high;
    throw ValidationError("unknown confidence '" + std::string(s) + "'");
}

void KnowledgeEntry::validate() const {
    if (count < 0 || total < 0 || count > total)
        throw ValidationError("knowledge entry '" + pattern + "': frequency " + std::to_string(count) + "/" +
                              std::to_string(total) + " is not a valid count/total");
    if (action.find_first_not_of(" \t\r\n") == std::string::npos)
        throw ValidationError("knowledge entry '" + pattern + "' has an empty action");
    if (evidence.empty()) throw ValidationError("knowledge entry '" + pattern + "' has no evidence");
}

std::pair<int, int> parse_frequency(const std::string& text) {
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) throw std::invalid_argument("no slash");
        int count = std::stoi(text.substr(0, slash));
        int total = std::stoi(text.substr(slash + 1));
        return {count, total};
    } catch (const std::logic_error&) {
        throw ValidationError("frequency '" + text + "' is not of the form count/total");
    }
}

Json to_json(const KnowledgeEntry& e) {
    Json j = {{"pattern", e.pattern},
              {"trigger", e.trigger},
              {"action", e.action},
              {"rationale", e.rationale},
              {"verification", e.verification},
              {"scope", e.scope},
              {"frequency", std::to_string(e.count) + "/" + std::to_string(e.total)},
              {"confidence", std::string(to_string(e.confidence))},
              {"evidence", e.evidence},
              {"category", std::string(to_string(e.category))}};
    j["provenance"] = {{"frequency", {{"count", e.count}, {"total", e.total}}},
                       {"validation_gain", e.validation_gain ? Json(*e.validation_gain) : Json(nullptr)},
                       {"evidence", e.evidence}};
    if (e.source_subgraph) j["source_subgraph"] = *e.source_subgraph;
    return j;
}

KnowledgeEntry entry_from_json(const Json& j) {
    KnowledgeEntry e;
    e.pattern = j.value("pattern", "");
    e.trigger = j.value("trigger", "");
    e.action = j.value("action", "");
    e.rationale = j.value("rationale", "");
    e.verification = j.value("verification", "");
    e.scope = j.value("scope", "");
    if (j.contains("provenance") && j["provenance"].contains("frequency")) {
        const auto& f = j["provenance"]["frequency"];
        e.count = f.at("count").get<int>();
        e.total = f.at("total").get<int>();
    } else if (j.contains("frequency") && j["frequency"].is_string()) {
        std::tie(e.count, e.total) = parse_frequency(j["frequency"].get<std::string>());
    } else if (j.contains("frequency") && j["frequency"].is_object()) {
        e.count = j["frequency"].at("count").get<int>();
        e.total = j["frequency"].at("total").get<int>();
    }
    e.confidence = confidence_from_string(j.value("confidence", "low"));
    e.evidence = j.value("evidence", std::vector<std::string>{});
    if (j.contains("category")) e.category = category_from_string(j["category"].get<std::string>());
    if (j.contains("provenance") && j["provenance"].contains("validation_gain") &&
        j["provenance"]["validation_gain"].is_number())
        e.validation_gain = j["provenance"]["validation_gain"].get<double>();
    if (j.contains("source_subgraph")) e.source_subgraph = j["source_subgraph"].get<int>();
    return e;
}

bool KnowledgeBase::gated() const {
    return std::all_of(entries.begin(), entries.end(),
                       [&](const auto& e) { return e.count >= eta && e.validation_gain && *e.validation_gain > 0.0; });
}

Json to_json(const KnowledgeBase& kb) {
    Json entries = Json::array(), dropped = Json::array();
    for (const auto& e : kb.entries) entries.push_back(to_json(e));
    for (const auto& d : kb.dropped) dropped.push_back({{"entry", to_json(d.entry)}, {"reason", d.reason}});
    Json j = {{"subgraph_id", kb.subgraph_id}, {"epoch", kb.epoch},     {"eta", kb.eta},
              {"members", kb.members},         {"entries", entries},    {"dropped", dropped},
              {"failed", kb.failed}};
    if (kb.failed) j["failure"] = kb.failure;
    return j;
}

KnowledgeBase knowledge_base_from_json(const Json& j) {
    KnowledgeBase kb;
    kb.subgraph_id = j.at("subgraph_id").get<int>();
    kb.epoch = j.at("epoch").get<int>();
    kb.eta = j.at("eta").get<int>();
    kb.members = j.value("members", std::vector<std::string>{});
    for (const auto& e : j.value("entries", Json::array())) kb.entries.push_back(entry_from_json(e));
    for (const auto& d : j.value("dropped", Json::array()))
        kb.dropped.push_back({entry_from_json(d.at("entry")), d.value("reason", "")});
    kb.failed = j.value("failed", false);
    kb.failure = j.value("failure", "");
    return kb;
}

void save_knowledge_base(const KnowledgeBase& kb, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write knowledge base " + path.string());
    out << to_json(kb).dump(2) << '\n';
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read knowledge base " + path.string());
    try {
        return knowledge_base_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
}

int eta_for(std::size_t subgraph_size, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("eta fraction must lie in (0, 1]");
    // small epsilon so 0.5 * 7 style products land on the intended floor
    return std::max(1, static_cast<int>(std::floor(fraction * static_cast<double>(subgraph_size) + 1e-9)));
}

std::vector<double> ScriptedValidation::evaluate(const KnowledgeEntry& entry, int) {
    auto it = gains_.find(entry.pattern);
    return it == gains_.end() ? std::vector<double>{} : it->second;
}

KnowledgeBase induce_knowledge(int subgraph_id, int epoch, const std::vector<std::string>& members,
                               const std::vector<Outcome>& outcomes, Inductor& inductor, ValidationHarness& validation,
                               const InductionOptions& options) {
    if (outcomes.empty()) throw ValidationError("induce_knowledge: no outcomes for subgraph " + std::to_string(subgraph_id));
    if (options.eta < 1) throw ConfigError("induce_knowledge: eta must be at least 1");
    if (options.min_val_runs < 1) throw ConfigError("induce_knowledge: min_val_runs must be at least 1");

    KnowledgeBase kb;
    kb.subgraph_id = subgraph_id;
    kb.epoch = epoch;
    kb.eta = options.eta;
    kb.members = members;
    std::sort(kb.members.begin(), kb.members.end());

    std::vector<KnowledgeEntry> drafts;
    try {
        drafts = inductor.induce({subgraph_id, epoch, options.eta, kb.members, &outcomes});
    } catch (const std::exception& e) {
        kb.failed = true;
        kb.failure = e.what();
        return kb;
    }

    std::set<std::pair<std::string, std::string>> seen;
    for (auto& e : drafts) {
        e.category = KnowledgeCategory::collective;
        e.validation_gain.reset();
        try {
            e.validate();
        } catch (const ValidationError& err) {
            kb.dropped.push_back({e, std::string("invalid: ") + err.what()});
            continue;
        }
        if (!seen.insert({e.pattern, e.action}).second) {
            kb.dropped.push_back({e, "duplicate of an earlier entry"});
            continue;
        }
        if (e.count < options.eta) {
            kb.dropped.push_back({e, "frequency " + std::to_string(e.count) + " below eta " + std::to_string(options.eta)});
            continue;
        }
        const auto gains = validation.evaluate(e, subgraph_id);
        if (static_cast<int>(gains.size()) < options.min_val_runs) {
            kb.dropped.push_back({e, "only " + std::to_string(gains.size()) + " validation runs, need " +
                                         std::to_string(options.min_val_runs)});
            continue;
        }
        const double mean = std::accumulate(gains.begin(), gains.end(), 0.0) / static_cast<double>(gains.size());
        e.validation_gain = mean;
        if (!(mean > 0.0)) {
            kb.dropped.push_back({e, "no validation gain"});
            continue;
        }
        kb.entries.push_back(e);
    }
    return kb;
}

Affinity subgraph_affinity(const ssgp::WeightedNeighborhood& neighborhood, const SubgraphPartition& partition) {
    Affinity a;
    a.per_subgraph.assign(partition.subgraphs.size(), 0.0);
    for (const auto& m : neighborhood.members) {
        int j = partition.index_of(m.candidate_id);
        if (j < 0) {
            a.unassigned += m.weight;
            a.unassigned_ids.push_back(m.candidate_id);
        } else {
            a.per_subgraph[static_cast<std::size_t>(j)] += m.weight;
        }
    }
    return a;
}

Retrieval retrieve_knowledge(const Affinity& affinity, const std::map<int, KnowledgeBase>& bases, int top_k) {
    if (top_k < 1) throw ConfigError("retrieve_knowledge: top_k must be at least 1");
    Retrieval r;
    if (bases.empty()) {
        r.warnings.push_back("no knowledge bases available");
        return r;
    }
    std::vector<int> order(affinity.per_subgraph.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return affinity.per_subgraph[static_cast<std::size_t>(a)] > affinity.per_subgraph[static_cast<std::size_t>(b)];
    });
    if (order.size() > static_cast<std::size_t>(top_k)) order.resize(static_cast<std::size_t>(top_k));
    r.subgraphs = order;

    std::set<std::pair<std::string, std::string>> seen;
    for (int j : order) {
        auto it = bases.find(j);
        if (it == bases.end()) {
            r.warnings.push_back("no knowledge base for subgraph " + std::to_string(j));
            continue;
        }
        for (auto e : it->second.entries) {
            if (!seen.insert({e.pattern, e.action}).second) continue;
            e.source_subgraph = j;
            r.entries.push_back(std::move(e));
        }
    }
    return r;
}

int select_best_epoch(const std::map<int, double>& epoch_val_gap) {
    if (epoch_val_gap.empty()) throw ValidationError("select_best_epoch: no epochs");
    int best = epoch_val_gap.begin()->first;
    double best_gap = epoch_val_gap.begin()->second;
    for (const auto& [epoch, gap] : epoch_val_gap)
        if (gap < best_gap) {
            best = epoch;
            best_gap = gap;
        }
    return best;
}

Json to_json(const CheckpointManifest& m) {
    Json records = Json::array();
    for (const auto& r : m.records)
        records.push_back({{"epoch", r.epoch}, {"subgraph", r.subgraph}, {"file", r.file}, {"mean_val_gap", r.mean_val_gap}});
    Json gaps = Json::object();
    for (const auto& [e, g] : m.epoch_val_gap) gaps[std::to_string(e)] = g;
    return {{"records", records},
            {"epoch_val_gap", gaps},
            {"best_epoch", m.best_epoch},
            {"partition", to_json(m.partition)},
            {"warnings", m.warnings}};
}

CheckpointManifest checkpoint_from_json(const Json& j) {
    CheckpointManifest m;
    for (const auto& r : j.at("records"))
        m.records.push_back({r.at("epoch").get<int>(), r.at("subgraph").get<int>(), r.at("file").get<std::string>(),
                             r.at("mean_val_gap").get<double>()});
    const Json gaps = j.value("epoch_val_gap", Json::object());
    for (const auto& [k, v] : gaps.items()) m.epoch_val_gap[std::stoi(k)] = v.get<double>();
    m.best_epoch = j.value("best_epoch", 0);
    if (j.contains("partition")) m.partition = partition_from_json(j["partition"]);
    m.warnings = j.value("warnings", std::vector<std::string>{});
    return m;
}

} // namespace reprograph::induction
