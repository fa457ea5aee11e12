#pragma once
// A candidate implementation: a file tree plus per-unit origin provenance.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace reprograph {

using Json = nlohmann::json;

// relative path -> file contents
using FileTree = std::map<std::string, std::string>;

enum class UnitKind { reuse, adapt, new_unit };

std::string_view to_string(UnitKind k);
UnitKind unit_kind_from_string(std::string_view s);

struct ManifestUnit {
    std::string unit_name;
    UnitKind kind = UnitKind::new_unit;
    std::string source;    // neighbor id, or "stub"
    std::string api_name;
    std::string file;      // where the unit body lives in the tree

    bool operator==(const ManifestUnit&) const = default;
};

struct Implementation {
    FileTree files;
    std::vector<ManifestUnit> units;

    bool operator==(const Implementation&) const = default;
};

Json to_json(const Implementation& impl);
Implementation implementation_from_json(const Json& j);

// Number of lines in a text body; a trailing newline does not open a new line.
std::size_t count_lines(std::string_view text);

// Treats the agent-facing "unknown" sentinel as absence.
bool is_unknown(std::string_view s);

} // namespace reprograph
