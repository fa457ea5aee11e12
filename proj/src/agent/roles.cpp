#include "reprograph/agent/roles.hpp"

#include <mutex>
#include <regex>
#include <set>

#include "reprograph/agent/assets.hpp"
#include "reprograph/error.hpp"

namespace reprograph::agent {

std::string_view to_string(Role r) {
    switch (r) {
        case Role::summarizer: return "summarizer";
        case Role::reviewer: return "reviewer";
        case Role::relation_analyzer: return "relation_analyzer";
        case Role::encapsulator: return "encapsulator";
        case Role::aggregator_advisor: return "aggregator_advisor";
        case Role::repro_agent: return "repro_agent";
        case Role::inductor: return "inductor";
        case Role::injector: return "injector";
    }
    return "summarizer";
}

Role role_from_string(std::string_view s) {
    for (Role r : kAllRoles)
        if (to_string(r) == s) return r;
    throw ConfigError("unknown agent role '" + std::string(s) + "'");
}

std::string_view template_name(Role r) { return to_string(r); }

namespace {

const std::regex& placeholder_re() {
    static const std::regex re(R"(\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\})");
    return re;
}

void collect(const std::string& text, std::vector<std::string>& out, std::set<std::string>& seen) {
    for (std::sregex_iterator it(text.begin(), text.end(), placeholder_re()), end; it != end; ++it)
        if (seen.insert((*it)[1]).second) out.push_back((*it)[1]);
}

std::string substitute(const std::string& text, const std::map<std::string, std::string>& vars) {
    std::string out;
    auto last = text.cbegin();
    for (std::sregex_iterator it(text.begin(), text.end(), placeholder_re()), end; it != end; ++it) {
        out.append(last, (*it)[0].first);
        auto v = vars.find((*it)[1]);
        if (v == vars.end()) throw ConfigError("missing prompt variable '" + (*it)[1].str() + "'");
        out += v->second;
        last = (*it)[0].second;
    }
    out.append(last, text.cend());
    return out;
}

} // namespace

std::vector<std::string> PromptTemplate::placeholders() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    collect(system_text, out, seen);
    collect(user_text, out, seen);
    return out;
}

PromptTemplate parse_template(std::string name, std::string_view document) {
    static constexpr std::string_view sys = "---SYSTEM_PROMPT---\n", usr = "---USER_PROMPT---\n";
    auto s = document.find(sys), u = document.find(usr);
    if (s == std::string_view::npos || u == std::string_view::npos || u < s)
        throw ConfigError("template '" + name + "' lacks SYSTEM_PROMPT/USER_PROMPT sections");
    PromptTemplate t;
    t.name = std::move(name);
    t.system_text = std::string(document.substr(s + sys.size(), u - s - sys.size()));
    t.user_text = std::string(document.substr(u + usr.size()));
    return t;
}

const PromptTemplate& builtin_template(std::string_view name) {
    static std::mutex mu;
    static std::map<std::string, PromptTemplate, std::less<>> cache;
    std::lock_guard lock(mu);
    if (auto it = cache.find(name); it != cache.end()) return it->second;
    const auto& assets = embedded_assets();
    auto it = assets.find("prompts/" + std::string(name) + ".prompt");
    if (it == assets.end()) throw ConfigError("no built-in prompt template '" + std::string(name) + "'");
    return cache.emplace(std::string(name), parse_template(std::string(name), it->second)).first->second;
}

const PromptTemplate& builtin_template(Role r) { return builtin_template(template_name(r)); }

RenderedPrompt render_prompt(const PromptTemplate& t, const std::map<std::string, std::string>& vars) {
    return {substitute(t.system_text, vars), substitute(t.user_text, vars)};
}

} // namespace reprograph::agent
