#pragma once
// Prompt templates and response schemas compiled into the binary, keyed by
// their path under assets/ (e.g. "prompts/reviewer.prompt").

#include <map>
#include <string>

namespace reprograph::agent {

const std::map<std::string, std::string>& embedded_assets();

} // namespace reprograph::agent
