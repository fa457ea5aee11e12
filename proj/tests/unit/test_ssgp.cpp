#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "reprograph/bound_sim.hpp"
#include "reprograph/error.hpp"
#include "reprograph/ssgp.hpp"

using namespace reprograph;
using namespace reprograph::ssgp;

namespace {

RankingBallot ballot(const std::string& reviewer, std::map<std::string, int> ranks) { return {reviewer, std::move(ranks)}; }

// Five ballots where u takes ranks 1,2,1,3,1 among {u,v,w}.
std::vector<RankingBallot> hand_ballots() {
    return {ballot("r1", {{"u", 1}, {"v", 2}, {"w", 3}}), ballot("r2", {{"u", 2}, {"v", 1}, {"w", 3}}),
            ballot("r3", {{"u", 1}, {"v", 3}, {"w", 2}}), ballot("r4", {{"u", 3}, {"v", 1}, {"w", 2}}),
            ballot("r5", {{"u", 1}, {"v", 2}, {"w", 3}})};
}

RankAggregate with_score(const std::string& id, double s) {
    RankAggregate a;
    a.candidate_id = id;
    a.composite_score = s;
    a.mean_rank = s;
    return a;
}

std::vector<RankingBallot> random_ballots(std::mt19937_64& rng, int n, int k) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("c" + std::to_string(i));
    std::vector<RankingBallot> out;
    for (int r = 0; r < k; ++r) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 1);
        std::shuffle(perm.begin(), perm.end(), rng);
        RankingBallot b{"r" + std::to_string(r), {}};
        for (int i = 0; i < n; ++i) b.ranks[ids[i]] = perm[i];
        out.push_back(b);
    }
    return out;
}

} // namespace

TEST_CASE("mean, population std and composite score by hand") {
    const auto aggs = aggregate_ranks(hand_ballots(), 0.5);
    const auto u = *std::find_if(aggs.begin(), aggs.end(), [](const auto& a) { return a.candidate_id == "u"; });
    CHECK(u.mean_rank == doctest::Approx(1.6).epsilon(1e-14));
    CHECK(u.rank_std == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(u.composite_score == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(u.lambda == 0.5);
    for (const auto& a : aggs) CHECK(a.composite_score == doctest::Approx(a.mean_rank + a.lambda * a.rank_std));
}

TEST_CASE("unanimous ballots have zero spread") {
    std::vector<RankingBallot> bs;
    for (int r = 0; r < 5; ++r) bs.push_back(ballot("r" + std::to_string(r), {{"u", 1}, {"v", 2}}));
    for (const auto& a : aggregate_ranks(bs, 0.5)) CHECK(a.rank_std == 0.0);
    const auto u = aggregate_ranks(bs, 0.5).front();
    CHECK(u.candidate_id == "u");
    CHECK(u.mean_rank == 1.0);
    CHECK(u.composite_score == 1.0);
}

TEST_CASE("ballot errors") {
    CHECK_THROWS_AS(aggregate_ranks({}, 0.5), ValidationError);
    try {
        aggregate_ranks({ballot("good", {{"A", 1}, {"B", 2}}), ballot("bad", {{"A", 1}, {"B", 1}})}, 0.5);
        FAIL("accepted a duplicate rank");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("non-permutation") != std::string::npos);
        CHECK(std::string(e.what()).find("bad") != std::string::npos);
    }
    CHECK_THROWS_AS(aggregate_ranks({ballot("a", {{"A", 1}, {"B", 2}}), ballot("b", {{"A", 1}, {"C", 2}})}, 0.5),
                    ValidationError);
}

TEST_CASE("permutation rejection over random corruptions") {
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 50; ++n) {
        auto b = random_ballots(rng, n, 1).front();
        CHECK_NOTHROW(check_permutation(b));
        auto corrupt = b;
        auto it = std::next(corrupt.ranks.begin(), static_cast<long>(rng() % n));
        switch (rng() % 3) {
            case 0: it->second = 0; break;
            case 1: it->second = n + 1 + static_cast<int>(rng() % 5); break;
            default:
                if (n == 1) it->second = 2;
                else it->second = it == corrupt.ranks.begin() ? std::next(it)->second : std::prev(it)->second;
        }
        CHECK_THROWS_AS(check_permutation(corrupt), ValidationError);
    }
}

TEST_CASE("prune keeps the lowest scores with id tie-break") {
    std::vector<RankAggregate> aggs{with_score("d", 3.5), with_score("c", 2.0), with_score("b", 2.0), with_score("a", 1.2)};
    const auto kept = prune(aggs, 2);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].candidate_id == "a");
    CHECK(kept[1].candidate_id == "b");
    CHECK(prune(aggs, 10).size() == 4);
    CHECK_THROWS_AS(prune(aggs, 0), ConfigError);
}

TEST_CASE("softmax edge weights by hand") {
    const auto n = edge_weights("T", {with_score("A", 2.0), with_score("B", 3.0)});
    CHECK(n.weight_of("A") == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
    CHECK(n.weight_of("A") == doctest::Approx(0.73106).epsilon(1e-5));
    CHECK(n.weight_of("B") == doctest::Approx(0.26894).epsilon(1e-5));
    CHECK(edge_weights("T", {with_score("A", 7.0)}).members[0].weight == 1.0);
    const auto eq = edge_weights("T", {with_score("A", 2.0), with_score("B", 2.0), with_score("C", 2.0)});
    for (const auto& m : eq.members) CHECK(m.weight == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(edge_weights("T", {}), ValidationError);
}

TEST_CASE("softmax properties on random instances") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> score(1.0, 20.0);
    for (int t = 0; t < 300; ++t) {
        std::vector<RankAggregate> sel;
        const int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) sel.push_back(with_score("c" + std::to_string(i), score(rng)));
        const auto nb = edge_weights("T", prune(sel, n));
        double sum = 0.0;
        for (std::size_t i = 0; i < nb.members.size(); ++i) {
            CHECK(nb.members[i].weight > 0.0);
            sum += nb.members[i].weight;
            if (i > 0) {
                const auto& a = nb.members[i - 1];
                const auto& b = nb.members[i];
                if (a.composite_score < b.composite_score) CHECK(a.weight > b.weight);
                else CHECK(a.weight == b.weight);
            }
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

        // dyadic scores and shifts keep every subtraction exact
        std::vector<RankAggregate> dy, shifted;
        const double c = static_cast<double>(rng() % 64) / 8.0;
        for (int i = 0; i < n; ++i) {
            const double s = 1.0 + static_cast<double>(rng() % 160) / 16.0;
            dy.push_back(with_score("c" + std::to_string(i), s));
            shifted.push_back(with_score("c" + std::to_string(i), s + c));
        }
        const auto w1 = edge_weights("T", prune(dy, n)), w2 = edge_weights("T", prune(shifted, n));
        REQUIRE(w1.members.size() == w2.members.size());
        for (std::size_t i = 0; i < w1.members.size(); ++i) CHECK(w1.members[i].weight == w2.members[i].weight);
    }
}

TEST_CASE("composite score is monotone in mean and spread") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 200; ++t) {
        auto bs = random_ballots(rng, 4, 5);
        const double lambda = 0.5 + static_cast<double>(rng() % 4);
        auto score_of = [&](const std::vector<RankingBallot>& b) {
            for (const auto& a : aggregate_ranks(b, lambda))
                if (a.candidate_id == "c0") return a;
            return RankAggregate{};
        };
        const auto before = score_of(bs);
        // swap c0 one place down in a ballot where that is possible: mean strictly increases
        for (auto& b : bs) {
            const int r = b.ranks["c0"];
            if (r == 4) continue;
            for (auto& [id, rank] : b.ranks)
                if (rank == r + 1) rank = r;
            b.ranks["c0"] = r + 1;
            break;
        }
        const auto after = score_of(bs);
        if (after.mean_rank > before.mean_rank && after.rank_std >= before.rank_std)
            CHECK(after.composite_score > before.composite_score);
    }
    // equal means, larger spread: strictly worse for lambda > 0
    std::vector<RankingBallot> tight, wide;
    for (int r = 0; r < 4; ++r) tight.push_back(ballot("r" + std::to_string(r), {{"u", 2}, {"v", 1}, {"w", 3}}));
    wide = {ballot("a", {{"u", 1}, {"v", 2}, {"w", 3}}), ballot("b", {{"u", 3}, {"v", 1}, {"w", 2}}),
            ballot("c", {{"u", 1}, {"v", 2}, {"w", 3}}), ballot("d", {{"u", 3}, {"v", 1}, {"w", 2}})};
    const auto wu = aggregate_ranks(wide, 0.5);
    auto find_u = [](const std::vector<RankAggregate>& v) {
        return *std::find_if(v.begin(), v.end(), [](const auto& a) { return a.candidate_id == "u"; });
    };
    CHECK(find_u(aggregate_ranks(tight, 0.5)).mean_rank == find_u(wu).mean_rank);
    CHECK(find_u(aggregate_ranks(tight, 0.5)).composite_score < find_u(wu).composite_score);
}

TEST_CASE("pruning pipeline is byte-deterministic") {
    std::mt19937_64 rng(3);
    const auto bs = random_ballots(rng, 9, 5);
    auto run = [&] { return to_json(edge_weights("T", prune(aggregate_ranks(bs, 0.5), 3))).dump(); };
    CHECK(run() == run());
    const auto back = neighborhood_from_json(Json::parse(run()));
    CHECK(to_json(back).dump() == run());
    CHECK(presentation_order({"a", "b", "c", "d"}, 9, 2) == presentation_order({"d", "c", "b", "a"}, 9, 2));
}

TEST_CASE("analytic bounds") {
    BoundSimConfig c;
    c.lambda = 1.0;
    c.k = 1;
    CHECK(analytic_bound(c) == doctest::Approx(0.5).epsilon(1e-15));
    c.lambda = 3.0;
    c.k = 2;
    CHECK(analytic_bound(c) == doctest::Approx(0.2).epsilon(1e-15));
    c.family = NoiseFamily::sub_gaussian;
    c.lambda = 2.0;
    c.k = 1;
    CHECK(analytic_bound(c) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    CHECK(analytic_bound(c) == doctest::Approx(0.1353).epsilon(1e-3));
    c.lambda = 0.1;
    c.k = 10;
    CHECK(analytic_bound(c) == 1.0);
    c.c = 0.5;
    CHECK_THROWS_AS(simulate_pruning_bound(c), ConfigError);
}

TEST_CASE("simulation is independent of the worker count") {
    BoundSimConfig c;
    c.lambda = 1.0;
    c.k = 3;
    c.trials = 20000;
    c.seed = 99;
    const auto one = simulate_pruning_bound(c, 1), four = simulate_pruning_bound(c, 4);
    CHECK(one.violations == four.violations);
    CHECK(one.empirical_violation_prob <= one.analytic_bound + 3 * one.mc_stderr);
}
