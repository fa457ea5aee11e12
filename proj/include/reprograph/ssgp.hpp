#pragma once
// Semantic graph pruning: ensemble rank aggregation, risk-averse scoring,
// K_keep selection and softmax edge weights.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace reprograph::ssgp {

using Json = nlohmann::json;

inline constexpr int kDefaultReviewers = 5;
inline constexpr double kDefaultLambda = 0.5;
inline constexpr int kDefaultKeep = 3;

struct RankingBallot {
    std::string reviewer_id;
    std::map<std::string, int> ranks;  // candidate id -> rank, a permutation of 1..N
    Json provenance = Json::object();  // confidence / rationale / evidence / unknown; never scored
};

struct RankAggregate {
    std::string candidate_id;
    double mean_rank = 0.0;
    double rank_std = 0.0;  // population form (divisor K)
    double composite_score = 0.0;
    double lambda = kDefaultLambda;

    bool operator==(const RankAggregate&) const = default;
};

struct NeighborWeight {
    std::string candidate_id;
    double composite_score = 0.0;
    double weight = 0.0;

    bool operator==(const NeighborWeight&) const = default;
};

// N_prune(v_t) with normalized weights w(v_t, u). Members are ordered by
// ascending score, then id. An empty neighborhood is the degraded case of a
// target with no code-bearing neighbors.
struct WeightedNeighborhood {
    std::string target_id;
    std::vector<NeighborWeight> members;

    double weight_of(const std::string& id) const;  // 0 when absent
    bool operator==(const WeightedNeighborhood&) const = default;
};

// Throws ValidationError if the ballot's ranks are not a permutation of 1..N.
void check_permutation(const RankingBallot& ballot);

std::vector<RankAggregate> aggregate_ranks(const std::vector<RankingBallot>& ballots, double lambda);

// The min(k_keep, N) lowest-score candidates, ties broken by id.
std::vector<RankAggregate> prune(std::vector<RankAggregate> aggregates, int k_keep);

// w(u) = exp(-score(u)) / sum exp(-score(u')), evaluated with a min-score shift.
WeightedNeighborhood edge_weights(const std::string& target_id, const std::vector<RankAggregate>& selected);

// Per-reviewer shuffled candidate presentation order, reproducible from (seed, reviewer).
std::vector<std::string> presentation_order(std::vector<std::string> candidates, std::uint64_t seed,
                                            int reviewer_index);

Json to_json(const RankAggregate& a);
Json to_json(const WeightedNeighborhood& n);
Json to_json(const RankingBallot& b);
WeightedNeighborhood neighborhood_from_json(const Json& j);
RankingBallot ballot_from_json(const Json& j);

} // namespace reprograph::ssgp
