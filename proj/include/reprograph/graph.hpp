#pragma once
// Scientific citation graph: paper nodes, directed citation edges, JSONL persistence.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace reprograph {

using Json = nlohmann::json;

enum class Split { train, validation, test, external };

// Provenance label for a recovered decision or knowledge entry.
enum class KnowledgeCategory { relational, somatic, collective };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);
std::string_view to_string(KnowledgeCategory c);
KnowledgeCategory category_from_string(std::string_view s);

struct PaperNode {
    std::string id;
    std::string title;
    std::map<std::string, std::string> sections;  // at least "method", "experiments"
    std::optional<std::string> code_ref;          // directory relative to the graph file
    std::string release_date;                     // ISO-8601, YYYY-MM-DD[T...]
    Split split = Split::train;
    Json extra = Json::object();                  // unknown record fields, kept for round-trip

    // Method + Experiments text; other sections are deliberately ignored downstream.
    std::string method_experiments() const;

    bool operator==(const PaperNode&) const = default;
};

struct CitationEdge {
    std::string from;  // citing
    std::string to;    // cited
    std::optional<double> weight;
    Json extra = Json::object();

    bool operator==(const CitationEdge&) const = default;
};

struct GraphOptions {
    // Require every test node to be released strictly after all train/validation nodes.
    bool strict_split = false;
};

// Immutable after construction; every invariant is checked in build().
class CitationGraph {
public:
    CitationGraph() = default;

    static CitationGraph build(std::vector<PaperNode> nodes, std::vector<CitationEdge> edges,
                               const GraphOptions& options = {});

    const std::vector<PaperNode>& nodes() const noexcept { return nodes_; }
    const std::vector<CitationEdge>& edges() const noexcept { return edges_; }

    bool contains(std::string_view id) const;
    const PaperNode& node(std::string_view id) const;

    // N(v): the cited targets of v's out-edges, ordered by id.
    std::vector<const PaperNode*> neighbors(std::string_view id) const;
    std::vector<std::string> neighbor_ids(std::string_view id) const;

    std::optional<double> weight(std::string_view from, std::string_view to) const;

    bool operator==(const CitationGraph& other) const {
        return nodes_ == other.nodes_ && edges_ == other.edges_;
    }

private:
    std::vector<PaperNode> nodes_;
    std::vector<CitationEdge> edges_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::vector<std::size_t>> out_;  // node id -> edge indices
};

CitationGraph parse_graph(std::istream& in, const GraphOptions& options = {});
void write_graph(const CitationGraph& graph, std::ostream& out);

CitationGraph load_graph(const std::filesystem::path& path, const GraphOptions& options = {});
void save_graph(const CitationGraph& graph, const std::filesystem::path& path);

Json node_to_json(const PaperNode& node);
Json edge_to_json(const CitationEdge& edge);

} // namespace reprograph
