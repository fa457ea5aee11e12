#include "reprograph/ssgp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "reprograph/error.hpp"

namespace reprograph::ssgp {

double WeightedNeighborhood::weight_of(const std::string& id) const {
    for (const auto& m : members)
        if (m.candidate_id == id) return m.weight;
    return 0.0;
}

void check_permutation(const RankingBallot& ballot) {
    const auto n = ballot.ranks.size();
    std::vector<bool> used(n + 1, false);
    for (const auto& [id, r] : ballot.ranks) {
        if (r < 1 || static_cast<std::size_t>(r) > n || used[r])
            throw ValidationError("non-permutation ballot from reviewer '" + ballot.reviewer_id + "': rank " +
                                  std::to_string(r) + " for '" + id + "'");
        used[r] = true;
    }
}

std::vector<RankAggregate> aggregate_ranks(const std::vector<RankingBallot>& ballots, double lambda) {
    if (ballots.empty()) throw ValidationError("aggregate_ranks: empty ballot list");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("aggregate_ranks: lambda must be > 0");

    std::set<std::string> candidates;
    for (const auto& [id, r] : ballots.front().ranks) candidates.insert(id);
    for (const auto& b : ballots) {
        check_permutation(b);
        std::set<std::string> ids;
        for (const auto& [id, r] : b.ranks) ids.insert(id);
        if (ids != candidates)
            throw ValidationError("candidate-set mismatch: reviewer '" + b.reviewer_id +
                                  "' ranks a different candidate set");
    }

    const double k = static_cast<double>(ballots.size());
    std::vector<RankAggregate> out;
    out.reserve(candidates.size());
    for (const auto& id : candidates) {
        double sum = 0.0;
        for (const auto& b : ballots) sum += b.ranks.at(id);
        const double mean = sum / k;
        double ss = 0.0;
        for (const auto& b : ballots) {
            const double d = b.ranks.at(id) - mean;
            ss += d * d;
        }
        RankAggregate a;
        a.candidate_id = id;
        a.mean_rank = mean;
        a.rank_std = std::sqrt(ss / k);
        a.composite_score = a.mean_rank + lambda * a.rank_std;
        a.lambda = lambda;
        out.push_back(a);
    }
    return out;
}

std::vector<RankAggregate> prune(std::vector<RankAggregate> aggregates, int k_keep) {
    if (k_keep <= 0) throw ConfigError("prune: k_keep must be positive");
    if (aggregates.empty()) throw ValidationError("prune: no candidates");
    std::sort(aggregates.begin(), aggregates.end(), [](const RankAggregate& a, const RankAggregate& b) {
        if (a.composite_score != b.composite_score) return a.composite_score < b.composite_score;
        return a.candidate_id < b.candidate_id;
    });
    if (aggregates.size() > static_cast<std::size_t>(k_keep)) aggregates.resize(k_keep);
    return aggregates;
}

WeightedNeighborhood edge_weights(const std::string& target_id, const std::vector<RankAggregate>& selected) {
    if (selected.empty()) throw ValidationError("edge_weights: empty selection");
    double min_score = selected.front().composite_score;
    for (const auto& a : selected) min_score = std::min(min_score, a.composite_score);

    std::vector<double> e;
    e.reserve(selected.size());
    double z = 0.0;
    for (const auto& a : selected) {
        e.push_back(std::exp(-(a.composite_score - min_score)));
        z += e.back();
    }
    WeightedNeighborhood n;
    n.target_id = target_id;
    for (std::size_t i = 0; i < selected.size(); ++i)
        n.members.push_back({selected[i].candidate_id, selected[i].composite_score, e[i] / z});
    return n;
}

std::vector<std::string> presentation_order(std::vector<std::string> candidates, std::uint64_t seed,
                                            int reviewer_index) {
    std::sort(candidates.begin(), candidates.end());
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(reviewer_index)};
    std::mt19937_64 rng(seq);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    return candidates;
}

Json to_json(const RankAggregate& a) {
    return {{"candidate_id", a.candidate_id},
            {"mean_rank", a.mean_rank},
            {"rank_std", a.rank_std},
            {"composite_score", a.composite_score},
            {"lambda", a.lambda}};
}

Json to_json(const WeightedNeighborhood& n) {
    Json members = Json::array();
    for (const auto& m : n.members)
        members.push_back({{"candidate_id", m.candidate_id}, {"composite_score", m.composite_score}, {"weight", m.weight}});
    return {{"target_id", n.target_id}, {"members", members}};
}

Json to_json(const RankingBallot& b) {
    return {{"reviewer_id", b.reviewer_id}, {"ranks", Json(b.ranks)}, {"provenance", b.provenance}};
}

WeightedNeighborhood neighborhood_from_json(const Json& j) {
    WeightedNeighborhood n;
    n.target_id = j.at("target_id").get<std::string>();
    for (const auto& m : j.at("members"))
        n.members.push_back({m.at("candidate_id").get<std::string>(), m.at("composite_score").get<double>(),
                             m.at("weight").get<double>()});
    return n;
}

RankingBallot ballot_from_json(const Json& j) {
    RankingBallot b;
    b.reviewer_id = j.at("reviewer_id").get<std::string>();
    b.ranks = j.at("ranks").get<std::map<std::string, int>>();
    if (j.contains("provenance")) b.provenance = j["provenance"];
    return b;
}

} // namespace reprograph::ssgp
