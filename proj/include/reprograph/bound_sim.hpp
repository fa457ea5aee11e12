#pragma once
// Monte-Carlo check of the group-level mis-ranking bounds for the composite
// score s(u) = mu(u) + lambda * sigma(u).

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace reprograph::ssgp {

enum class NoiseFamily {
    bounded_variance,  // symmetric shifted-Pareto (Lomax) noise; only the variance is finite
    sub_gaussian,      // Gaussian noise, sub-Gaussian with constant c
};

std::string_view to_string(NoiseFamily f);
NoiseFamily noise_family_from_string(std::string_view s);

struct BoundSimConfig {
    NoiseFamily family = NoiseFamily::bounded_variance;
    double tail_exponent = 3.0;  // bounded_variance: Pareto shape, must exceed 2
    double c = 1.0;              // sub_gaussian: tail constant, c >= 1
    double lambda = 1.0;
    int k = 1;                   // size of the pruned set
    std::int64_t trials = 100000;
    std::uint64_t seed = 0;
};

struct BoundSimReport {
    NoiseFamily family = NoiseFamily::bounded_variance;
    double lambda = 0.0;
    int k = 0;
    std::int64_t trials = 0;
    std::int64_t violations = 0;
    double empirical_violation_prob = 0.0;
    double analytic_bound = 0.0;
    double mc_stderr = 0.0;
};

// K/(1+lambda^2) or K*exp(-lambda^2/(2c^2)), capped at 1.
double analytic_bound(const BoundSimConfig& cfg);

// Trials are split into fixed-size chunks with their own seeded engines, so the
// estimate does not depend on how many worker threads run.
BoundSimReport simulate_pruning_bound(const BoundSimConfig& cfg, unsigned workers = 0);

std::vector<BoundSimReport> sweep_bounds(const BoundSimConfig& base, const std::vector<double>& lambdas,
                                         const std::vector<int>& ks, unsigned workers = 0);

// columns: family,lambda,K,trials,empirical,bound,stderr
void write_csv(const std::vector<BoundSimReport>& rows, std::ostream& out);

} // namespace reprograph::ssgp
