#pragma once
// Execution backends: run a candidate implementation and report feedback.

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "reprograph/feedback.hpp"
#include "reprograph/implementation.hpp"

namespace reprograph {

struct ExecRequest {
    std::string target_id;
    int iteration = 0;
    double timeout_seconds = 7200.0;
};

class Executor {
public:
    virtual ~Executor() = default;
    // Throws ExecutorUnavailable when nothing could be run at all.
    virtual ExecutionFeedback execute(const Implementation& impl, const ExecRequest& req) = 0;
};

// Offline stand-in for training + evaluation. The candidate scores
// official * (fraction of official files reproduced byte-for-byte), so a
// perfect reproduction has gap 0 and an empty tree is non-executable.
class ReferenceExecutor : public Executor {
public:
    ReferenceExecutor(FileTree official, MetricVector official_metrics);
    ExecutionFeedback execute(const Implementation& impl, const ExecRequest& req) override;

private:
    FileTree official_;
    MetricVector metrics_;
};

// Replays a scripted gap sequence: the i-th execution reports metrics whose
// gap against `official` equals gaps[i] (the last value repeats).
class ScriptedExecutor : public Executor {
public:
    ScriptedExecutor(MetricVector official, std::vector<double> gaps);
    ExecutionFeedback execute(const Implementation& impl, const ExecRequest& req) override;
    int executions() const noexcept { return calls_.load(); }

private:
    MetricVector official_;
    std::vector<double> gaps_;
    std::atomic<int> calls_{0};
};

struct SandboxOptions {
    std::vector<std::string> runner;    // argv prefix; request and feedback paths are appended
    std::filesystem::path scratch_root; // per-execution workdirs are created beneath
    std::string entrypoint = "main.py";
    std::vector<std::string> args;
    std::string metrics_path = "metrics.json";
};

// Delegates to the external sandbox runner through its file contract.
class SandboxExecutor : public Executor {
public:
    explicit SandboxExecutor(SandboxOptions options);
    ExecutionFeedback execute(const Implementation& impl, const ExecRequest& req) override;

private:
    SandboxOptions options_;
    std::atomic<int> counter_{0};
};

// Writes every file of the tree beneath root (creating directories).
void materialize(const FileTree& files, const std::filesystem::path& root);

// Runs argv (PATH lookup on argv[0]) and returns its exit status; -1 if it could not start.
int run_process(const std::vector<std::string>& argv);

} // namespace reprograph
