#pragma once
// Task-level graphs over training papers and their Louvain partition.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace reprograph::induction {

using Json = nlohmann::json;

// Unordered pair stored with first < second.
using PaperPair = std::pair<std::string, std::string>;
PaperPair make_pair_key(const std::string& a, const std::string& b);

// w~(u,v) = (w(u,v) + w(v,u)) / 2, a missing direction counting as 0.
std::map<PaperPair, double> symmetrize(const std::map<std::pair<std::string, std::string>, double>& directed);

class TaskGraph {
public:
    TaskGraph() = default;
    TaskGraph(std::string task_name, std::vector<std::string> members);

    const std::string& task_name() const noexcept { return task_; }
    const std::vector<std::string>& members() const noexcept { return members_; }  // sorted
    bool has_member(const std::string& id) const;

    // Throws ValidationError for non-members, self pairs or negative weights.
    void set_weight(const std::string& a, const std::string& b, double w);
    double weight(const std::string& a, const std::string& b) const;
    const std::map<PaperPair, double>& weights() const noexcept { return weights_; }
    double total_weight() const;

    static TaskGraph from_directed(std::string task_name, std::vector<std::string> members,
                                   const std::map<std::pair<std::string, std::string>, double>& directed);

private:
    std::string task_;
    std::vector<std::string> members_;
    std::map<PaperPair, double> weights_;
};

Json to_json(const TaskGraph& g);
TaskGraph task_graph_from_json(const Json& j);

struct SubgraphPartition {
    std::vector<std::vector<std::string>> subgraphs;  // each sorted; ordered by first member
    double modularity = 0.0;
    std::uint64_t seed = 0;

    int index_of(const std::string& id) const;  // -1 when absent
    bool operator==(const SubgraphPartition&) const = default;
};

Json to_json(const SubgraphPartition& p);
SubgraphPartition partition_from_json(const Json& j);

// Standard weighted modularity; 0 for a graph without weight.
double modularity(const TaskGraph& g, const std::vector<std::vector<std::string>>& parts, double resolution = 1.0);

// Local moving in sorted node order plus aggregation, repeated until no move
// improves modularity. The seed only breaks exact ties between target communities.
SubgraphPartition louvain_partition(const TaskGraph& g, std::uint64_t seed, double resolution = 1.0);

} // namespace reprograph::induction
