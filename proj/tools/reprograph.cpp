// Command-line surface over the reproduction engine.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "reprograph/bound_sim.hpp"
#include "reprograph/error.hpp"
#include "reprograph/pipeline.hpp"

namespace rp = reprograph;
namespace pl = reprograph::pipeline;

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kConfig = 2, kStage = 3, kValidation = 4 };

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::string single_target(const pl::RunConfig& cfg) {
    if (cfg.targets.size() != 1) throw rp::ConfigError("this subcommand needs exactly one --target");
    return cfg.targets.front();
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-based paper reproduction engine"};
    app.set_config("--config", "", "key-value config file; flags override it");
    app.require_subcommand(1);

    pl::RunConfig cfg;
    std::string backend = "mock", executor = "reference", callability = "static", runner = "python3 -m sandbox_runner";
    std::string fail_stage;
    std::uint64_t seed = 0;

    app.add_option("--graph", cfg.graph_file, "graph JSONL file");
    app.add_option("--target", cfg.targets, "target paper id (repeatable)");
    app.add_option("--out", cfg.output_dir, "output directory")->capture_default_str();
    app.add_option("--backend", backend, "agent backend")->check(CLI::IsMember({"mock", "live"}))->capture_default_str();
    app.add_option("--mock-profile", cfg.mock_profile, "mock agent profile JSON");
    app.add_flag("--mock-oracle", cfg.mock_oracle, "mock repair agent sees official code");
    app.add_option("--base-url", cfg.live.base_url, "chat-completions endpoint prefix");
    app.add_option("--model", cfg.live.model, "live model name");
    app.add_option("--api-key-env", cfg.live.api_key_env, "env var holding the API key")->capture_default_str();
    app.add_option("--temperature", cfg.live.temperature)->capture_default_str();
    app.add_option("--retries", cfg.retries, "re-asks after a rejected response")->capture_default_str();
    app.add_option("--max-in-flight", cfg.max_in_flight, "concurrent agent calls")->capture_default_str();
    app.add_option("--reviewers", cfg.reviewers)->capture_default_str();
    app.add_option("--lambda", cfg.lambda, "uncertainty penalty")->capture_default_str();
    app.add_option("--k-keep", cfg.k_keep)->capture_default_str();
    app.add_option("--beta", cfg.beta, "reuse bias")->capture_default_str();
    app.add_option("--budget", cfg.budget, "repair plans per attempt")->capture_default_str();
    app.add_option("--threshold", cfg.threshold, "gap percentage that stops refinement")->capture_default_str();
    app.add_option("--attempts", cfg.attempts)->capture_default_str();
    app.add_option("--timeout", cfg.timeout_seconds, "execution timeout, seconds")->capture_default_str();
    app.add_option("--eta-fraction", cfg.eta_fraction)->capture_default_str();
    app.add_option("--epochs", cfg.epochs)->capture_default_str();
    app.add_option("--top-k", cfg.top_k)->capture_default_str();
    app.add_option("--min-val-runs", cfg.min_val_runs)->capture_default_str();
    app.add_option("--injection-passes", cfg.injection_passes)->capture_default_str();
    app.add_option("--knowledge", cfg.knowledge, "checkpoint manifest from train-kb");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (required for mock runs)");
    app.add_option("--workers", cfg.workers)->capture_default_str();
    app.add_option("--executor", executor)->check(CLI::IsMember({"reference", "sandbox"}))->capture_default_str();
    app.add_option("--runner", runner, "sandbox runner command")->capture_default_str();
    app.add_option("--callability", callability)->check(CLI::IsMember({"static", "executor"}))->capture_default_str();
    app.add_option("--fail-before-stage", fail_stage, "abort before the named stage (resume testing)");

    auto* prune = app.add_subcommand("prune", "weighted neighborhood of one target")->fallthrough();
    auto* aggregate = app.add_subcommand("aggregate", "relation-aware aggregation for one target")->fallthrough();
    auto* refine = app.add_subcommand("refine", "refinement attempts for one target")->fallthrough();
    auto* train = app.add_subcommand("train-kb", "induce subgraph knowledge bases")->fallthrough();
    auto* reproduce = app.add_subcommand("reproduce", "full pipeline over the targets")->fallthrough();

    auto* simulate = app.add_subcommand("simulate-bounds", "Monte-Carlo mis-ranking bound sweep");
    std::string family = "bounded_variance", csv_path;
    std::vector<double> lambdas{0.5, 1, 2, 3};
    std::vector<int> ks{1, 5, 10};
    rp::ssgp::BoundSimConfig sim;
    simulate->add_option("--family", family)->check(CLI::IsMember({"bounded_variance", "sub_gaussian"}))->capture_default_str();
    simulate->add_option("--lambdas", lambdas)->capture_default_str();
    simulate->add_option("--ks", ks)->capture_default_str();
    simulate->add_option("--trials", sim.trials)->capture_default_str();
    simulate->add_option("--tail-exponent", sim.tail_exponent)->capture_default_str();
    simulate->add_option("--c", sim.c, "sub-Gaussian constant")->capture_default_str();
    simulate->add_option("--sim-seed", sim.seed)->capture_default_str();
    simulate->add_option("--csv", csv_path, "write the sweep here instead of stdout");

    auto* report = app.add_subcommand("report", "print or verify a run report")->fallthrough();
    bool verify = false;
    report->add_flag("--verify", verify, "recompute every gap from the metric files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        cfg.backend = backend == "live" ? pl::BackendKind::live : pl::BackendKind::mock;
        cfg.executor = executor == "sandbox" ? pl::ExecutorKind::sandbox : pl::ExecutorKind::reference;
        cfg.callability = callability == "executor" ? pl::CallabilityKind::executor : pl::CallabilityKind::static_check;
        cfg.runner = split_words(runner);
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (!fail_stage.empty()) cfg.fail_before_stage = fail_stage;

        if (*simulate) {
            sim.family = rp::ssgp::noise_family_from_string(family);
            const auto rows = rp::ssgp::sweep_bounds(sim, lambdas, ks);
            if (csv_path.empty()) {
                rp::ssgp::write_csv(rows, std::cout);
            } else {
                std::ofstream out(csv_path);
                if (!out) throw rp::ConfigError("cannot write " + csv_path);
                rp::ssgp::write_csv(rows, out);
            }
            return kOk;
        }
        if (*report) {
            const auto path = cfg.output_dir / "report.json";
            std::ifstream in(path);
            if (!in) throw rp::ConfigError("no report at " + path.string());
            const auto parsed = pl::run_report_from_json(nlohmann::json::parse(in));
            for (const auto& t : parsed.targets)
                std::cout << t.target_id << "  initial " << t.initial_gap << "  refined " << t.refined_gap << "  final "
                          << t.final_gap << "  reuse/adapt/new " << t.code_source.reuse << '/' << t.code_source.adapt
                          << '/' << t.code_source.fresh << "  iterations " << t.iterations << '\n';
            if (verify) {
                const auto problems = pl::verify_report(cfg.output_dir);
                for (const auto& p : problems) std::cerr << "mismatch: " << p << '\n';
                if (!problems.empty()) return kValidation;
                std::cout << "verified\n";
            }
            return kOk;
        }

        pl::Engine engine(cfg);
        if (*prune) {
            const auto r = engine.prune(single_target(cfg));
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
            print(rp::ssgp::to_json(r.neighborhood));
        } else if (*aggregate) {
            const auto t = single_target(cfg);
            const auto a = engine.aggregate(t, engine.prune(t).neighborhood);
            for (const auto& w : a.warnings) std::cerr << "warning: " << w << '\n';
            print(a.aggregation);
        } else if (*refine) {
            const auto t = single_target(cfg);
            const auto a = engine.aggregate(t, engine.prune(t).neighborhood);
            nlohmann::json out = nlohmann::json::array();
            for (int i = 0; i < cfg.attempts; ++i) {
                const auto r = engine.refine(t, a.initial, "refine/attempt_" + std::to_string(i));
                out.push_back({{"attempt", i}, {"best_gap", r.best_gap}, {"best_iteration", r.best_iteration},
                               {"executions", r.executions}, {"converged", r.converged}});
            }
            print(out);
        } else if (*train) {
            print(rp::induction::to_json(engine.train_knowledge()));
        } else if (*reproduce) {
            const auto r = engine.reproduce_all();
            for (const auto& t : r.targets)
                for (const auto& w : t.warnings) std::cerr << "warning [" << t.target_id << "]: " << w << '\n';
            print(pl::to_json(r));
        }
        return kOk;
    } catch (const rp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const rp::StageFailure& e) {
        std::cerr << e.what() << '\n';
        return kStage;
    } catch (const rp::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const rp::ParseError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUnexpected;
    }
}
