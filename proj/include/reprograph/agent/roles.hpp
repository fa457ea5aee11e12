#pragma once
// Agent roles and their prompt templates.

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace reprograph::agent {

enum class Role { summarizer, reviewer, relation_analyzer, encapsulator, aggregator_advisor, repro_agent, inductor, injector };

inline constexpr std::array<Role, 8> kAllRoles{Role::summarizer,         Role::reviewer,    Role::relation_analyzer,
                                              Role::encapsulator,       Role::aggregator_advisor, Role::repro_agent,
                                              Role::inductor,           Role::injector};

std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

// The repro agent has a second template, used for the knowledge-injection pass.
inline constexpr std::string_view kOrchestratorTemplate = "orchestrator";

// Template (and schema) name bound to a role.
std::string_view template_name(Role r);

struct PromptTemplate {
    std::string name;
    std::string system_text;
    std::string user_text;

    // Distinct placeholder names in order of first appearance (system, then user).
    std::vector<std::string> placeholders() const;
};

struct RenderedPrompt {
    std::string system;
    std::string user;

    bool operator==(const RenderedPrompt&) const = default;
};

// Splits a "---SYSTEM_PROMPT--- / ---USER_PROMPT---" document.
PromptTemplate parse_template(std::string name, std::string_view document);

// Built-in template by name ("summarizer", ..., "orchestrator").
const PromptTemplate& builtin_template(std::string_view name);
const PromptTemplate& builtin_template(Role r);

// Substitutes every {{ name }}. Throws ConfigError naming the first missing variable.
RenderedPrompt render_prompt(const PromptTemplate& t, const std::map<std::string, std::string>& vars);

} // namespace reprograph::agent
