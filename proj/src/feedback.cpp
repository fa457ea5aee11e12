#include "reprograph/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "reprograph/error.hpp"

namespace reprograph {

MetricVector::MetricVector(std::initializer_list<std::pair<std::string, double>> entries) {
    for (const auto& [k, v] : entries) {
        if (get(k)) throw ValidationError("duplicate metric name '" + k + "'");
        set(k, v);
    }
}

MetricVector MetricVector::from_map(const std::map<std::string, double>& m) {
    MetricVector v;
    for (const auto& [k, x] : m) v.set(k, x);
    return v;
}

void MetricVector::set(const std::string& name, double value) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), name,
                               [](const auto& e, const std::string& n) { return e.first < n; });
    if (it != entries_.end() && it->first == name)
        it->second = value;
    else
        entries_.insert(it, {name, value});
}

std::optional<double> MetricVector::get(std::string_view name) const {
    for (const auto& [k, v] : entries_)
        if (k == name) return v;
    return std::nullopt;
}

Json to_json(const MetricVector& m) {
    Json j = Json::object();
    for (const auto& [k, v] : m.entries()) j[k] = v;
    return j;
}

MetricVector metrics_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("metrics must be a JSON object");
    MetricVector m;
    for (auto& [k, v] : j.items()) {
        if (!v.is_number()) throw ValidationError("metric '" + k + "' is not a number");
        m.set(k, v.get<double>());
    }
    return m;
}

std::string_view to_string(ExecStatus s) {
    switch (s) {
        case ExecStatus::ok: return "ok";
        case ExecStatus::runtime_error: return "runtime_error";
        case ExecStatus::timeout: return "timeout";
        case ExecStatus::non_executable: return "non_executable";
    }
    return "non_executable";
}

ExecStatus exec_status_from_string(std::string_view s) {
    if (s == "ok") return ExecStatus::ok;
    if (s == "runtime_error") return ExecStatus::runtime_error;
    if (s == "timeout") return ExecStatus::timeout;
    if (s == "non_executable") return ExecStatus::non_executable;
    throw ValidationError("unknown execution status '" + std::string(s) + "'");
}

void ExecutionFeedback::validate() const {
    if (status == ExecStatus::ok && !metrics) throw ValidationError("feedback: status ok requires metrics");
    if (status == ExecStatus::non_executable && metrics)
        throw ValidationError("feedback: non_executable feedback must not carry metrics");
    if (!(wall_time >= 0.0)) throw ValidationError("feedback: negative wall_time");
}

Json to_json(const ExecutionFeedback& fb) {
    return {{"status", std::string(to_string(fb.status))},
            {"logs", fb.logs},
            {"error_message", fb.error_message ? Json(*fb.error_message) : Json(nullptr)},
            {"metrics", fb.metrics ? to_json(*fb.metrics) : Json(nullptr)},
            {"wall_time", fb.wall_time}};
}

ExecutionFeedback feedback_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("feedback document is not an object");
    static const std::set<std::string> allowed{"status", "logs", "error_message", "metrics", "wall_time"};
    for (auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ValidationError("feedback: unexpected field '" + k + "'");
    for (const char* k : {"status", "logs", "wall_time"})
        if (!j.contains(k)) throw ValidationError(std::string("feedback: missing field '") + k + "'");

    ExecutionFeedback fb;
    if (!j["status"].is_string()) throw ValidationError("feedback: status must be a string");
    fb.status = exec_status_from_string(j["status"].get<std::string>());
    if (!j["logs"].is_string()) throw ValidationError("feedback: logs must be a string");
    fb.logs = j["logs"].get<std::string>();
    if (auto it = j.find("error_message"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw ValidationError("feedback: error_message must be a string or null");
        fb.error_message = it->get<std::string>();
    }
    if (auto it = j.find("metrics"); it != j.end() && !it->is_null()) fb.metrics = metrics_from_json(*it);
    if (!j["wall_time"].is_number()) throw ValidationError("feedback: wall_time must be a number");
    fb.wall_time = j["wall_time"].get<double>();
    fb.validate();
    return fb;
}

} // namespace reprograph
