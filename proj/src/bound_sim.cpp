#include "reprograph/bound_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include "reprograph/error.hpp"

namespace reprograph::ssgp {

namespace {

constexpr std::int64_t kChunk = 8192;

void validate(const BoundSimConfig& cfg) {
    if (!(cfg.lambda > 0.0)) throw ConfigError("bound simulation: lambda must be > 0");
    if (cfg.k < 1) throw ConfigError("bound simulation: K must be positive");
    if (cfg.trials < 1) throw ConfigError("bound simulation: trials must be positive");
    if (cfg.family == NoiseFamily::bounded_variance && !(cfg.tail_exponent > 2.0))
        throw ConfigError("bound simulation: tail exponent must exceed 2 for finite variance");
    if (cfg.family == NoiseFamily::sub_gaussian && !(cfg.c >= 1.0))
        throw ConfigError("bound simulation: sub-Gaussian constant c must be >= 1");
}

double candidate_sigma(int u) { return 0.5 + 0.25 * u; }
double candidate_mu(int u) { return 1.0 + u; }

std::int64_t run_chunk(const BoundSimConfig& cfg, std::int64_t chunk, std::int64_t begin, std::int64_t end) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double a = cfg.tail_exponent;
    // Lomax(a, s) with s chosen so the symmetrized variable has unit variance.
    const double lomax_scale = std::sqrt((a - 1.0) * (a - 2.0) / 2.0);

    std::int64_t violations = 0;
    for (std::int64_t t = begin; t < end; ++t) {
        bool violated = false;
        for (int u = 0; u < cfg.k; ++u) {
            const double sigma = candidate_sigma(u);
            double z;
            if (cfg.family == NoiseFamily::bounded_variance) {
                const double mag = lomax_scale * (std::pow(1.0 - unif(rng), -1.0 / a) - 1.0);
                z = unif(rng) < 0.5 ? -mag : mag;
            } else {
                z = gauss(rng);
            }
            const double rank = candidate_mu(u) + sigma * z;
            if (rank >= candidate_mu(u) + cfg.lambda * sigma) violated = true;
        }
        violations += violated;
    }
    return violations;
}

} // namespace

std::string_view to_string(NoiseFamily f) {
    return f == NoiseFamily::bounded_variance ? "bounded_variance" : "sub_gaussian";
}

NoiseFamily noise_family_from_string(std::string_view s) {
    if (s == "bounded_variance" || s == "heavy_tailed") return NoiseFamily::bounded_variance;
    if (s == "sub_gaussian") return NoiseFamily::sub_gaussian;
    throw ConfigError("unknown noise family '" + std::string(s) + "'");
}

double analytic_bound(const BoundSimConfig& cfg) {
    const double l2 = cfg.lambda * cfg.lambda;
    const double b = cfg.family == NoiseFamily::bounded_variance ? cfg.k / (1.0 + l2)
                                                                   : cfg.k * std::exp(-l2 / (2.0 * cfg.c * cfg.c));
    return std::min(1.0, b);
}

BoundSimReport simulate_pruning_bound(const BoundSimConfig& cfg, unsigned workers) {
    validate(cfg);
    const std::int64_t chunks = (cfg.trials + kChunk - 1) / kChunk;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::int64_t>(workers, chunks));

    std::vector<std::int64_t> counts(chunks, 0);
    auto work = [&](unsigned w) {
        for (std::int64_t c = w; c < chunks; c += workers)
            counts[c] = run_chunk(cfg, c, c * kChunk, std::min(cfg.trials, (c + 1) * kChunk));
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }

    BoundSimReport r;
    r.family = cfg.family;
    r.lambda = cfg.lambda;
    r.k = cfg.k;
    r.trials = cfg.trials;
    for (auto c : counts) r.violations += c;
    const double p = static_cast<double>(r.violations) / static_cast<double>(cfg.trials);
    r.empirical_violation_prob = p;
    r.analytic_bound = analytic_bound(cfg);
    r.mc_stderr = std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.trials));
    return r;
}

std::vector<BoundSimReport> sweep_bounds(const BoundSimConfig& base, const std::vector<double>& lambdas,
                                         const std::vector<int>& ks, unsigned workers) {
    std::vector<BoundSimReport> rows;
    for (double l : lambdas)
        for (int k : ks) {
            auto cfg = base;
            cfg.lambda = l;
            cfg.k = k;
            rows.push_back(simulate_pruning_bound(cfg, workers));
        }
    return rows;
}

void write_csv(const std::vector<BoundSimReport>& rows, std::ostream& out) {
    out << "family,lambda,K,trials,empirical,bound,stderr\n";
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << std::setprecision(10);
    for (const auto& r : rows)
        out << to_string(r.family) << ',' << r.lambda << ',' << r.k << ',' << r.trials << ','
            << r.empirical_violation_prob << ',' << r.analytic_bound << ',' << r.mc_stderr << '\n';
    out.flags(flags);
    out.precision(prec);
}

} // namespace reprograph::ssgp
