#include "reprograph/louvain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "reprograph/error.hpp"

namespace reprograph::induction {

PaperPair make_pair_key(const std::string& a, const std::string& b) {
    return a < b ? PaperPair{a, b} : PaperPair{b, a};
}

std::map<PaperPair, double> symmetrize(const std::map<std::pair<std::string, std::string>, double>& directed) {
    std::map<PaperPair, double> out;
    for (const auto& [edge, w] : directed) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw ValidationError("negative or non-finite weight on " + edge.first + "->" + edge.second);
        if (edge.first == edge.second) continue;
        out[make_pair_key(edge.first, edge.second)] += 0.5 * w;
    }
    return out;
}

TaskGraph::TaskGraph(std::string task_name, std::vector<std::string> members)
    : task_(std::move(task_name)), members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
        throw ValidationError("task graph '" + task_ + "' lists a member twice");
}

bool TaskGraph::has_member(const std::string& id) const {
    return std::binary_search(members_.begin(), members_.end(), id);
}

void TaskGraph::set_weight(const std::string& a, const std::string& b, double w) {
    if (!has_member(a) || !has_member(b))
        throw ValidationError("task graph weight on non-member pair " + a + "," + b);
    if (a == b) throw ValidationError("task graph self pair " + a);
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("negative task graph weight on " + a + "," + b);
    auto key = make_pair_key(a, b);
    if (w == 0.0) weights_.erase(key);
    else weights_[key] = w;
}

double TaskGraph::weight(const std::string& a, const std::string& b) const {
    auto it = weights_.find(make_pair_key(a, b));
    return it == weights_.end() ? 0.0 : it->second;
}

double TaskGraph::total_weight() const {
    double m = 0.0;
    for (const auto& [k, w] : weights_) m += w;
    return m;
}

TaskGraph TaskGraph::from_directed(std::string task_name, std::vector<std::string> members,
                                   const std::map<std::pair<std::string, std::string>, double>& directed) {
    TaskGraph g(std::move(task_name), std::move(members));
    for (const auto& [pair, w] : symmetrize(directed)) g.set_weight(pair.first, pair.second, w);
    return g;
}

Json to_json(const TaskGraph& g) {
    Json edges = Json::array();
    for (const auto& [pair, w] : g.weights()) edges.push_back({pair.first, pair.second, w});
    return {{"task_name", g.task_name()}, {"members", g.members()}, {"weights", edges}};
}

TaskGraph task_graph_from_json(const Json& j) {
    TaskGraph g(j.value("task_name", ""), j.at("members").get<std::vector<std::string>>());
    for (const auto& e : j.value("weights", Json::array()))
        g.set_weight(e.at(0).get<std::string>(), e.at(1).get<std::string>(), e.at(2).get<double>());
    return g;
}

int SubgraphPartition::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < subgraphs.size(); ++i)
        if (std::binary_search(subgraphs[i].begin(), subgraphs[i].end(), id)) return static_cast<int>(i);
    return -1;
}

Json to_json(const SubgraphPartition& p) {
    return {{"subgraphs", p.subgraphs}, {"modularity", p.modularity}, {"seed", p.seed}};
}

SubgraphPartition partition_from_json(const Json& j) {
    return {j.at("subgraphs").get<std::vector<std::vector<std::string>>>(), j.value("modularity", 0.0),
            j.value("seed", std::uint64_t{0})};
}

double modularity(const TaskGraph& g, const std::vector<std::vector<std::string>>& parts, double resolution) {
    const double m = g.total_weight();
    if (m <= 0.0) return 0.0;
    std::map<std::string, std::size_t> comm;
    for (std::size_t c = 0; c < parts.size(); ++c)
        for (const auto& id : parts[c]) comm[id] = c;
    std::vector<double> internal(parts.size(), 0.0), degree(parts.size(), 0.0);
    for (const auto& [pair, w] : g.weights()) {
        auto a = comm.at(pair.first), b = comm.at(pair.second);
        degree[a] += w;
        degree[b] += w;
        if (a == b) internal[a] += w;
    }
    double q = 0.0;
    for (std::size_t c = 0; c < parts.size(); ++c) q += internal[c] / m - resolution * std::pow(degree[c] / (2.0 * m), 2);
    return q;
}

namespace {

// Weighted graph on 0..n-1 with self-loop weight kept apart (counted once).
struct Level {
    std::vector<std::vector<std::pair<std::size_t, double>>> adj;  // no self entries
    std::vector<double> self;
};

std::vector<std::vector<std::string>> canonical(std::vector<std::vector<std::string>> parts) {
    for (auto& p : parts) std::sort(p.begin(), p.end());
    std::erase_if(parts, [](const auto& p) { return p.empty(); });
    std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return parts;
}

} // namespace

SubgraphPartition louvain_partition(const TaskGraph& g, std::uint64_t seed, double resolution) {
    const auto& ids = g.members();
    if (ids.empty()) throw ValidationError("louvain_partition: empty task graph");
    const double m = g.total_weight();
    constexpr double eps = 1e-14;

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;

    Level level;
    level.adj.resize(ids.size());
    level.self.assign(ids.size(), 0.0);
    for (const auto& [pair, w] : g.weights()) {
        auto a = index.at(pair.first), b = index.at(pair.second);
        level.adj[a].emplace_back(b, w);
        level.adj[b].emplace_back(a, w);
    }
    for (auto& nbrs : level.adj) std::sort(nbrs.begin(), nbrs.end());

    // membership of each original node in the current level's node ids
    std::vector<std::size_t> owner(ids.size());
    std::iota(owner.begin(), owner.end(), 0);
    std::mt19937_64 rng(seed);

    if (m > 0.0) {
        while (true) {
            const std::size_t n = level.adj.size();
            std::vector<double> k(n);
            for (std::size_t i = 0; i < n; ++i) {
                k[i] = 2.0 * level.self[i];
                for (const auto& [j, w] : level.adj[i]) k[i] += w;
            }
            std::vector<std::size_t> comm(n);
            std::iota(comm.begin(), comm.end(), 0);
            std::vector<double> tot = k;

            bool moved_any = false;
            for (bool moved = true; moved;) {
                moved = false;
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t own = comm[i];
                    std::map<std::size_t, double> links;  // community -> weight from i
                    links[own] += 0.0;
                    for (const auto& [j, w] : level.adj[i]) links[comm[j]] += w;
                    tot[own] -= k[i];
                    auto gain = [&](std::size_t c, double kin) { return kin - resolution * tot[c] * k[i] / (2.0 * m); };

                    const double stay = gain(own, links[own]);
                    double best_gain = stay;
                    std::vector<std::size_t> best;
                    for (const auto& [c, kin] : links) {
                        if (c == own) continue;
                        double gc = gain(c, kin);
                        if (gc > best_gain + eps) {
                            best_gain = gc;
                            best = {c};
                        } else if (!best.empty() && std::abs(gc - best_gain) <= eps) {
                            best.push_back(c);
                        }
                    }
                    std::size_t target = own;
                    if (!best.empty()) {
                        target = best.size() == 1 ? best.front()
                                                  : best[std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(rng)];
                    }
                    tot[target] += k[i];
                    if (target != own) {
                        comm[i] = target;
                        moved = true;
                        moved_any = true;
                    }
                }
            }
            if (!moved_any) break;

            // aggregation: communities renumbered by first appearance
            std::vector<std::size_t> first(n, n), order(n);
            std::size_t nc = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (first[comm[i]] == n) first[comm[i]] = nc++;
                order[i] = first[comm[i]];
            }
            Level next;
            next.adj.resize(nc);
            next.self.assign(nc, 0.0);
            std::vector<std::map<std::size_t, double>> acc(nc);
            for (std::size_t i = 0; i < n; ++i) {
                next.self[order[i]] += level.self[i];
                for (const auto& [j, w] : level.adj[i]) {
                    if (order[i] == order[j]) {
                        if (i < j) next.self[order[i]] += w;
                    } else {
                        acc[order[i]][order[j]] += w;
                    }
                }
            }
            for (std::size_t c = 0; c < nc; ++c) next.adj[c].assign(acc[c].begin(), acc[c].end());
            for (auto& o : owner) o = order[o];
            level = std::move(next);
            if (nc == 1) break;
        }
    }

    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < ids.size(); ++i) groups[owner[i]].push_back(ids[i]);
    std::vector<std::vector<std::string>> parts;
    for (auto& [c, members] : groups) parts.push_back(std::move(members));
    SubgraphPartition out;
    out.subgraphs = canonical(std::move(parts));
    out.modularity = modularity(g, out.subgraphs, resolution);
    out.seed = seed;
    return out;
}

} // namespace reprograph::induction
