#include "reprograph/graph.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "reprograph/error.hpp"

namespace reprograph {

namespace {

std::optional<std::chrono::sys_days> parse_date(std::string_view s) {
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (s.size() > 10 && s[10] != 'T') return std::nullopt;
    auto digits = [&](std::size_t from, std::size_t n) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = from; i < from + n; ++i) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
    if (!y || !m || !d) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{unsigned(*m)},
                                    std::chrono::day{unsigned(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return std::chrono::sys_days{ymd};
}

const std::set<std::string>& node_fields() {
    static const std::set<std::string> f{"kind", "id", "title", "sections", "code_ref", "release_date", "split"};
    return f;
}

const std::set<std::string>& edge_fields() {
    static const std::set<std::string> f{"kind", "from", "to", "weight"};
    return f;
}

std::string require_string(const Json& rec, const char* key, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string())
        throw ParseError(std::string("missing or non-string field '") + key + "'", line);
    return it->get<std::string>();
}

PaperNode node_from_json(const Json& rec, std::size_t line) {
    PaperNode n;
    n.id = require_string(rec, "id", line);
    n.title = rec.contains("title") && rec["title"].is_string() ? rec["title"].get<std::string>() : "";
    if (auto it = rec.find("sections"); it != rec.end()) {
        if (!it->is_object()) throw ParseError("'sections' must be an object", line);
        for (auto& [k, v] : it->items()) {
            if (!v.is_string()) throw ParseError("section '" + k + "' must be a string", line);
            n.sections[k] = v.get<std::string>();
        }
    }
    if (auto it = rec.find("code_ref"); it != rec.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError("'code_ref' must be a string or null", line);
        n.code_ref = it->get<std::string>();
    }
    n.release_date = require_string(rec, "release_date", line);
    try {
        n.split = split_from_string(require_string(rec, "split", line));
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), line);
    }
    for (auto& [k, v] : rec.items())
        if (!node_fields().count(k)) n.extra[k] = v;
    return n;
}

CitationEdge edge_from_json(const Json& rec, std::size_t line) {
    CitationEdge e;
    e.from = require_string(rec, "from", line);
    e.to = require_string(rec, "to", line);
    if (auto it = rec.find("weight"); it != rec.end() && !it->is_null()) {
        if (!it->is_number()) throw ParseError("'weight' must be a number", line);
        e.weight = it->get<double>();
    }
    for (auto& [k, v] : rec.items())
        if (!edge_fields().count(k)) e.extra[k] = v;
    return e;
}

} // namespace

std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
        case Split::external: return "external";
    }
    return "external";
}

Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    if (s == "external") return Split::external;
    throw ValidationError("unknown split '" + std::string(s) + "'");
}

std::string_view to_string(KnowledgeCategory c) {
    switch (c) {
        case KnowledgeCategory::relational: return "relational";
        case KnowledgeCategory::somatic: return "somatic";
        case KnowledgeCategory::collective: return "collective";
    }
    return "collective";
}

KnowledgeCategory category_from_string(std::string_view s) {
    if (s == "relational") return KnowledgeCategory::relational;
    if (s == "somatic") return KnowledgeCategory::somatic;
    if (s == "collective") return KnowledgeCategory::collective;
    throw ValidationError("unknown knowledge category '" + std::string(s) + "'");
}

std::string PaperNode::method_experiments() const {
    std::string out;
    for (const char* key : {"method", "experiments"}) {
        auto it = sections.find(key);
        if (it == sections.end()) continue;
        if (!out.empty()) out += "\n\n";
        out += it->second;
    }
    return out;
}

CitationGraph CitationGraph::build(std::vector<PaperNode> nodes, std::vector<CitationEdge> edges,
                                   const GraphOptions& options) {
    CitationGraph g;
    g.nodes_ = std::move(nodes);
    g.edges_ = std::move(edges);

    for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
        const auto& n = g.nodes_[i];
        if (n.id.empty()) throw ValidationError("node with empty id");
        if (!parse_date(n.release_date))
            throw ValidationError("node '" + n.id + "' has invalid release_date '" + n.release_date + "'");
        if (!g.index_.emplace(n.id, i).second) throw ValidationError("duplicate node id '" + n.id + "'");
    }

    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t i = 0; i < g.edges_.size(); ++i) {
        const auto& e = g.edges_[i];
        for (const auto* end : {&e.from, &e.to})
            if (!g.index_.count(*end))
                throw ValidationError("edge " + e.from + "->" + e.to + " references missing node '" + *end + "'");
        if (e.from == e.to) throw ValidationError("self-loop on '" + e.from + "'");
        if (!seen.emplace(e.from, e.to).second)
            throw ValidationError("duplicate edge " + e.from + "->" + e.to);
        if (e.weight && (!std::isfinite(*e.weight) || *e.weight < 0.0 || *e.weight > 1.0))
            throw ValidationError("edge " + e.from + "->" + e.to + " weight outside [0,1]");
        g.out_[e.from].push_back(i);
    }

    for (const auto& [src, idx] : g.out_) {
        double sum = 0.0;
        std::size_t weighted = 0;
        for (auto i : idx)
            if (g.edges_[i].weight) {
                ++weighted;
                sum += *g.edges_[i].weight;
            }
        if (weighted > 0 && weighted < idx.size())
            throw ValidationError("out-edges of '" + src + "' are only partly weighted");
        if (weighted > 0 && std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("out-edge weights of '" + src + "' sum to " + std::to_string(sum) + ", not 1");
    }

    if (options.strict_split) {
        std::optional<std::chrono::sys_days> latest_train;
        for (const auto& n : g.nodes_)
            if (n.split == Split::train || n.split == Split::validation) {
                auto d = *parse_date(n.release_date);
                if (!latest_train || d > *latest_train) latest_train = d;
            }
        for (const auto& n : g.nodes_)
            if (n.split == Split::test && latest_train && *parse_date(n.release_date) <= *latest_train)
                throw ValidationError("test node '" + n.id + "' is not released after every train/validation node");
    }
    return g;
}

bool CitationGraph::contains(std::string_view id) const { return index_.count(std::string(id)) > 0; }

const PaperNode& CitationGraph::node(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw ValidationError("unknown paper id '" + std::string(id) + "'");
    return nodes_[it->second];
}

std::vector<const PaperNode*> CitationGraph::neighbors(std::string_view id) const {
    node(id);
    std::vector<const PaperNode*> out;
    if (auto it = out_.find(std::string(id)); it != out_.end())
        for (auto i : it->second) out.push_back(&node(edges_[i].to));
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->id < b->id; });
    return out;
}

std::vector<std::string> CitationGraph::neighbor_ids(std::string_view id) const {
    std::vector<std::string> ids;
    for (auto* n : neighbors(id)) ids.push_back(n->id);
    return ids;
}

std::optional<double> CitationGraph::weight(std::string_view from, std::string_view to) const {
    auto it = out_.find(std::string(from));
    if (it == out_.end()) return std::nullopt;
    for (auto i : it->second)
        if (edges_[i].to == to) return edges_[i].weight;
    return std::nullopt;
}

Json node_to_json(const PaperNode& n) {
    Json rec = n.extra;
    rec["kind"] = "node";
    rec["id"] = n.id;
    rec["title"] = n.title;
    rec["sections"] = Json(n.sections);
    rec["code_ref"] = n.code_ref ? Json(*n.code_ref) : Json(nullptr);
    rec["release_date"] = n.release_date;
    rec["split"] = std::string(to_string(n.split));
    return rec;
}

Json edge_to_json(const CitationEdge& e) {
    Json rec = e.extra;
    rec["kind"] = "edge";
    rec["from"] = e.from;
    rec["to"] = e.to;
    if (e.weight) rec["weight"] = *e.weight;
    return rec;
}

CitationGraph parse_graph(std::istream& in, const GraphOptions& options) {
    std::vector<PaperNode> nodes;
    std::vector<CitationEdge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Json rec;
        try {
            rec = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
        }
        if (!rec.is_object()) throw ParseError("record is not a JSON object", lineno);
        auto kind = require_string(rec, "kind", lineno);
        if (kind == "node")
            nodes.push_back(node_from_json(rec, lineno));
        else if (kind == "edge")
            edges.push_back(edge_from_json(rec, lineno));
        else
            throw ParseError("unknown record kind '" + kind + "'", lineno);
    }
    return CitationGraph::build(std::move(nodes), std::move(edges), options);
}

void write_graph(const CitationGraph& graph, std::ostream& out) {
    for (const auto& n : graph.nodes()) out << node_to_json(n).dump() << '\n';
    for (const auto& e : graph.edges()) out << edge_to_json(e).dump() << '\n';
}

CitationGraph load_graph(const std::filesystem::path& path, const GraphOptions& options) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open graph file " + path.string());
    return parse_graph(in, options);
}

void save_graph(const CitationGraph& graph, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write graph file " + path.string());
    write_graph(graph, out);
}

} // namespace reprograph
