#include "reprograph/executor.hpp"

#include <cmath>
#include <fstream>
#include <spawn.h>
#include <sys/wait.h>

#include "reprograph/error.hpp"

extern char** environ;

namespace reprograph {

ReferenceExecutor::ReferenceExecutor(FileTree official, MetricVector official_metrics)
    : official_(std::move(official)), metrics_(std::move(official_metrics)) {
    if (official_.empty()) throw ValidationError("reference executor: official tree is empty");
}

ExecutionFeedback ReferenceExecutor::execute(const Implementation& impl, const ExecRequest&) {
    ExecutionFeedback fb;
    if (impl.files.empty()) {
        fb.status = ExecStatus::non_executable;
        fb.error_message = "no files to execute";
        return fb;
    }
    std::size_t matched = 0;
    std::string log;
    for (const auto& [path, body] : official_) {
        auto it = impl.files.find(path);
        const bool ok = it != impl.files.end() && it->second == body;
        matched += ok;
        log += (ok ? "match    " : "mismatch ") + path + "\n";
    }
    const double fraction = static_cast<double>(matched) / static_cast<double>(official_.size());
    MetricVector m;
    for (const auto& [name, v] : metrics_.entries()) m.set(name, v * fraction);
    fb.status = ExecStatus::ok;
    fb.logs = log;
    fb.metrics = m;
    return fb;
}

ScriptedExecutor::ScriptedExecutor(MetricVector official, std::vector<double> gaps)
    : official_(std::move(official)), gaps_(std::move(gaps)) {
    if (gaps_.empty()) throw ValidationError("scripted executor: empty gap script");
    for (double g : gaps_)
        if (g < 0.0 || g > 100.0) throw ValidationError("scripted executor: gap outside [0,100]");
}

ExecutionFeedback ScriptedExecutor::execute(const Implementation&, const ExecRequest&) {
    const int i = calls_.fetch_add(1);
    const double g = gaps_[std::min<std::size_t>(i, gaps_.size() - 1)];
    MetricVector m;
    for (const auto& [name, v] : official_.entries()) m.set(name, v * (1.0 - g / 100.0));
    ExecutionFeedback fb;
    fb.status = ExecStatus::ok;
    fb.logs = "scripted execution " + std::to_string(i);
    fb.metrics = m;
    return fb;
}

void materialize(const FileTree& files, const std::filesystem::path& root) {
    for (const auto& [rel, body] : files) {
        auto path = root / rel;
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        out << body;
    }
}

int run_process(const std::vector<std::string>& argv) {
    if (argv.empty()) return -1;
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    pid_t pid;
    if (posix_spawnp(&pid, args[0], nullptr, nullptr, args.data(), environ) != 0) return -1;
    int status = 0;
    if (waitpid(pid, &status, 0) < 0) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SandboxExecutor::SandboxExecutor(SandboxOptions options) : options_(std::move(options)) {
    if (options_.runner.empty()) throw ConfigError("sandbox executor: no runner command configured");
}

ExecutionFeedback SandboxExecutor::execute(const Implementation& impl, const ExecRequest& req) {
    if (!impl.files.count(options_.entrypoint)) {
        ExecutionFeedback fb;
        fb.status = ExecStatus::non_executable;
        fb.error_message = "entrypoint '" + options_.entrypoint + "' is missing from the implementation";
        return fb;
    }
    const auto id = counter_.fetch_add(1);
    const auto base = options_.scratch_root / (req.target_id + "_" + std::to_string(req.iteration) + "_" + std::to_string(id));
    const auto workdir = base / "work";
    std::filesystem::remove_all(base);
    std::filesystem::create_directories(workdir);
    materialize(impl.files, workdir);

    Json request = {{"workdir", std::filesystem::absolute(workdir).string()},
                    {"entrypoint", options_.entrypoint},
                    {"args", options_.args},
                    {"timeout", req.timeout_seconds},
                    {"metrics_path", options_.metrics_path}};
    const auto req_path = base / "request.json";
    const auto fb_path = base / "feedback.json";
    {
        std::ofstream out(req_path);
        out << request.dump(2) << '\n';
    }
    auto argv = options_.runner;
    argv.push_back(req_path.string());
    argv.push_back(fb_path.string());
    const int rc = run_process(argv);
    if (rc != 0 || !std::filesystem::exists(fb_path))
        throw ExecutorUnavailable("sandbox runner exited with status " + std::to_string(rc) +
                                  " without writing feedback");
    std::ifstream in(fb_path);
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ExecutorUnavailable(std::string("sandbox runner wrote malformed feedback: ") + e.what());
    }
    return feedback_from_json(doc);
}

} // namespace reprograph
