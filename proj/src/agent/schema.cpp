#include "reprograph/agent/schema.hpp"

#include <map>
#include <mutex>
#include <regex>

#include "reprograph/agent/assets.hpp"
#include "reprograph/error.hpp"

namespace reprograph::agent {

namespace {

bool has_type(const Json& doc, const std::string& type) {
    if (type == "object") return doc.is_object();
    if (type == "array") return doc.is_array();
    if (type == "string") return doc.is_string();
    if (type == "integer") return doc.is_number_integer() || (doc.is_number_float() && doc.get<double>() == static_cast<double>(static_cast<long long>(doc.get<double>())));
    if (type == "number") return doc.is_number();
    if (type == "boolean") return doc.is_boolean();
    if (type == "null") return doc.is_null();
    throw ConfigError("schema uses unsupported type '" + type + "'");
}

std::string pointer(const std::string& base, const std::string& token) { return base + "/" + token; }

std::optional<std::string> check(const Json& schema, const Json& doc, const std::string& at) {
    auto fail = [&](const std::string& msg) { return std::optional<std::string>((at.empty() ? "/" : at) + ": " + msg); };

    if (schema.contains("anyOf")) {
        std::string reasons;
        bool ok = false;
        for (const auto& alt : schema["anyOf"]) {
            auto r = check(alt, doc, at);
            if (!r) {
                ok = true;
                break;
            }
            reasons += (reasons.empty() ? "" : " | ") + *r;
        }
        if (!ok) return fail("matches no alternative (" + reasons + ")");
    }

    if (schema.contains("type")) {
        const auto& t = schema["type"];
        bool ok = false;
        if (t.is_string()) ok = has_type(doc, t.get<std::string>());
        else
            for (const auto& each : t) ok = ok || has_type(doc, each.get<std::string>());
        if (!ok) return fail("expected type " + t.dump() + ", got " + doc.type_name());
    }

    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& v : schema["enum"]) found = found || v == doc;
        if (!found) return fail("value " + doc.dump() + " not in " + schema["enum"].dump());
    }

    if (doc.is_string()) {
        const auto& s = doc.get_ref<const std::string&>();
        if (schema.contains("minLength") && s.size() < schema["minLength"].get<std::size_t>())
            return fail("string shorter than " + schema["minLength"].dump());
        if (schema.contains("pattern") && !std::regex_search(s, std::regex(schema["pattern"].get<std::string>())))
            return fail("string does not match pattern " + schema["pattern"].dump());
    }

    if (doc.is_number()) {
        const double v = doc.get<double>();
        if (schema.contains("minimum") && v < schema["minimum"].get<double>()) return fail("below minimum " + schema["minimum"].dump());
        if (schema.contains("maximum") && v > schema["maximum"].get<double>()) return fail("above maximum " + schema["maximum"].dump());
    }

    if (doc.is_array()) {
        if (schema.contains("minItems") && doc.size() < schema["minItems"].get<std::size_t>())
            return fail("fewer than " + schema["minItems"].dump() + " items");
        if (schema.contains("items"))
            for (std::size_t i = 0; i < doc.size(); ++i)
                if (auto r = check(schema["items"], doc[i], pointer(at, std::to_string(i)))) return r;
    }

    if (doc.is_object()) {
        for (const auto& req : schema.value("required", Json::array()))
            if (!doc.contains(req.get<std::string>())) return fail("missing required property '" + req.get<std::string>() + "'");
        const Json props = schema.value("properties", Json::object());
        for (const auto& [key, value] : doc.items()) {
            if (props.contains(key)) {
                if (auto r = check(props[key], value, pointer(at, key))) return r;
            } else if (schema.contains("additionalProperties")) {
                const auto& extra = schema["additionalProperties"];
                if (extra.is_boolean() && !extra.get<bool>()) return fail("unexpected property '" + key + "'");
                if (extra.is_object())
                    if (auto r = check(extra, value, pointer(at, key))) return r;
            }
        }
    }
    return std::nullopt;
}

} // namespace

std::optional<std::string> validate_schema(const Json& schema, const Json& doc) { return check(schema, doc, ""); }

const Json& response_schema(std::string_view name) {
    static std::mutex mu;
    static std::map<std::string, Json, std::less<>> cache;
    std::lock_guard lock(mu);
    if (auto it = cache.find(name); it != cache.end()) return it->second;
    const auto& assets = embedded_assets();
    auto it = assets.find("schemas/" + std::string(name) + ".schema.json");
    if (it == assets.end()) throw ConfigError("no response schema for '" + std::string(name) + "'");
    return cache.emplace(std::string(name), Json::parse(it->second)).first->second;
}

} // namespace reprograph::agent
