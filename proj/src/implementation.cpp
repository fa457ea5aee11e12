#include "reprograph/implementation.hpp"

#include <algorithm>
#include <cctype>

#include "reprograph/error.hpp"

namespace reprograph {

std::string_view to_string(UnitKind k) {
    switch (k) {
        case UnitKind::reuse: return "reuse";
        case UnitKind::adapt: return "adapt";
        case UnitKind::new_unit: return "new";
    }
    return "new";
}

UnitKind unit_kind_from_string(std::string_view s) {
    if (s == "reuse") return UnitKind::reuse;
    if (s == "adapt") return UnitKind::adapt;
    if (s == "new") return UnitKind::new_unit;
    throw ValidationError("unknown unit kind '" + std::string(s) + "'");
}

Json to_json(const Implementation& impl) {
    Json units = Json::array();
    for (const auto& u : impl.units)
        units.push_back({{"unit_name", u.unit_name},
                         {"kind", std::string(to_string(u.kind))},
                         {"source", u.source},
                         {"api_name", u.api_name},
                         {"file", u.file}});
    return {{"files", Json(impl.files)}, {"units", units}};
}

Implementation implementation_from_json(const Json& j) {
    Implementation impl;
    impl.files = j.at("files").get<FileTree>();
    for (const auto& u : j.at("units"))
        impl.units.push_back({u.at("unit_name").get<std::string>(),
                              unit_kind_from_string(u.at("kind").get<std::string>()),
                              u.at("source").get<std::string>(), u.at("api_name").get<std::string>(),
                              u.at("file").get<std::string>()});
    return impl;
}

std::size_t count_lines(std::string_view text) {
    if (text.empty()) return 0;
    auto n = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    return text.back() == '\n' ? n : n + 1;
}

bool is_unknown(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return true;
    auto e = s.find_last_not_of(" \t\r\n");
    auto t = s.substr(b, e - b + 1);
    if (t.size() != 7) return false;
    std::string lower;
    for (char c : t) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return lower == "unknown";
}

} // namespace reprograph
