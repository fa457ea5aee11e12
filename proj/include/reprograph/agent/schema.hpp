#pragma once
// A small JSON-schema subset: type, properties, required,
// additionalProperties, items, enum, minimum, maximum, minLength, minItems,
// pattern and anyOf.

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace reprograph::agent {

using Json = nlohmann::json;

// First violation as "<json pointer>: <message>", or nullopt when valid.
std::optional<std::string> validate_schema(const Json& schema, const Json& doc);

// Built-in response schema by template name.
const Json& response_schema(std::string_view name);

} // namespace reprograph::agent
