#pragma once
// Metric vectors and execution feedback, including the JSON wire form shared
// with the sandbox runner:
//   {"status":"ok|runtime_error|timeout|non_executable","logs","error_message",
//    "metrics":{name:value},"wall_time"}

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace reprograph {

using Json = nlohmann::json;

// Entries are kept sorted by name so two vectors compare canonically.
class MetricVector {
public:
    MetricVector() = default;
    MetricVector(std::initializer_list<std::pair<std::string, double>> entries);
    static MetricVector from_map(const std::map<std::string, double>& m);

    void set(const std::string& name, double value);
    std::optional<double> get(std::string_view name) const;
    const std::vector<std::pair<std::string, double>>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    bool operator==(const MetricVector&) const = default;

private:
    std::vector<std::pair<std::string, double>> entries_;
};

Json to_json(const MetricVector& m);
MetricVector metrics_from_json(const Json& j);

enum class ExecStatus { ok, runtime_error, timeout, non_executable };

std::string_view to_string(ExecStatus s);
ExecStatus exec_status_from_string(std::string_view s);

struct ExecutionFeedback {
    ExecStatus status = ExecStatus::non_executable;
    std::string logs;
    std::optional<std::string> error_message;
    std::optional<MetricVector> metrics;
    double wall_time = 0.0;  // seconds

    // status=ok requires metrics; non_executable forbids them.
    void validate() const;

    bool operator==(const ExecutionFeedback&) const = default;
};

// Wire form. from_json validates the schema and the status/metrics invariant.
Json to_json(const ExecutionFeedback& fb);
ExecutionFeedback feedback_from_json(const Json& j);

} // namespace reprograph
