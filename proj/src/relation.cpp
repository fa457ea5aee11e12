#include "reprograph/relation.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include "reprograph/error.hpp"

namespace reprograph::relation {

std::string_view to_string(Risk r) {
    switch (r) {
        case Risk::low: return "low";
        case Risk::medium: return "medium";
        case Risk::high: return "high";
    }
    return "low";
}

Risk risk_from_string(std::string_view s) {
    if (s == "low") return Risk::low;
    if (s == "medium") return Risk::medium;
    if (s == "high") return Risk::high;
    throw ValidationError("unknown risk level '" + std::string(s) + "'");
}

std::string_view to_string(Callability c) {
    switch (c) {
        case Callability::unvalidated: return "unvalidated";
        case Callability::pass: return "pass";
        case Callability::fail: return "fail";
    }
    return "unvalidated";
}

std::string normalize_unit_name(std::string_view name) {
    std::string out;
    char prev = 0;
    for (char c : name) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            if (std::isupper(uc) && (std::islower(static_cast<unsigned char>(prev)) || std::isdigit(static_cast<unsigned char>(prev))))
                out += '_';
            out += static_cast<char>(std::tolower(uc));
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
        prev = c;
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

namespace {

bool bad_location(const std::string& loc) {
    auto path = loc.substr(0, loc.find(':'));
    return path.empty() || path.front() == '/' || path.find("..") != std::string::npos;
}

} // namespace

RelationAnnotation validate_annotation(const RelationAnnotation& a) {
    RelationAnnotation out = a;
    std::vector<std::string> problems;
    std::map<std::string, std::string> owner;  // normalized name -> set label

    auto visit = [&](std::vector<UnitDecl>& units, const char* label, bool needs_location) {
        for (auto& u : units) {
            auto norm = normalize_unit_name(u.unit_name);
            if (norm.empty()) {
                problems.push_back(std::string("empty unit_name in ") + label + " set");
                continue;
            }
            u.unit_name = norm;
            if (auto [it, fresh] = owner.emplace(norm, label); !fresh)
                problems.push_back("unit '" + norm + "' appears in both " + it->second + " and " + label);
            if (u.code_location && is_unknown(*u.code_location)) u.code_location.reset();
            if (needs_location && !u.code_location)
                problems.push_back(std::string(label) + " unit '" + norm + "' has no code_location");
            if (needs_location && u.code_location && bad_location(*u.code_location))
                problems.push_back(std::string(label) + " unit '" + norm + "' has a code_location outside the neighbor's code");
            if (!needs_location && u.code_location)
                problems.push_back("new unit '" + norm + "' must not carry a code_location");
        }
    };
    visit(out.reuse_units, "reuse", true);
    visit(out.adapt_units, "adapt", true);
    visit(out.new_units, "new", false);

    std::map<std::string, std::string> diffs;
    for (const auto& [name, text] : a.diff_instructions) diffs[normalize_unit_name(name)] = text;
    for (const auto& u : out.adapt_units) {
        auto it = diffs.find(u.unit_name);
        if (it == diffs.end() || it->second.find_first_not_of(" \t\r\n") == std::string::npos)
            problems.push_back("adapt unit '" + u.unit_name + "' has no diff instruction");
    }
    for (const auto& [name, text] : diffs) {
        auto it = owner.find(name);
        if (it != owner.end() && it->second != std::string("adapt"))
            problems.push_back(it->second + " unit '" + name + "' must not carry a diff instruction");
        else if (it == owner.end())
            problems.push_back("diff instruction for unknown unit '" + name + "'");
    }
    out.diff_instructions = diffs;

    if (!problems.empty()) {
        std::string msg = "invalid relation annotation " + a.target_id + "<-" + a.neighbor_id + ": ";
        for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
        throw ValidationError(msg);
    }
    return out;
}

Json to_json(const RelationAnnotation& a) {
    auto unit = [](const UnitDecl& u) {
        Json j = {{"unit_name", u.unit_name}, {"description", u.description}, {"evidence", u.evidence}};
        if (u.code_location) j["code_location"] = *u.code_location;
        return j;
    };
    Json reuse = Json::array(), adapt = Json::array(), fresh = Json::array();
    for (const auto& u : a.reuse_units) {
        auto j = unit(u);
        j["risk"] = std::string(to_string(u.risk));
        reuse.push_back(j);
    }
    for (const auto& u : a.adapt_units) {
        auto j = unit(u);
        j["risk"] = std::string(to_string(u.risk));
        auto it = a.diff_instructions.find(u.unit_name);
        j["diff_instruction"] = it == a.diff_instructions.end() ? "" : it->second;
        adapt.push_back(j);
    }
    for (const auto& u : a.new_units) {
        auto j = unit(u);
        j["reason"] = u.reason;
        fresh.push_back(j);
    }
    return {{"target_id", a.target_id}, {"neighbor_id", a.neighbor_id},
            {"reusable_units", reuse},  {"adaptable_units", adapt}, {"new_units", fresh}};
}

RelationAnnotation annotation_from_json(const std::string& target_id, const std::string& neighbor_id, const Json& j) {
    RelationAnnotation a;
    a.target_id = target_id;
    a.neighbor_id = neighbor_id;
    auto unit = [](const Json& u) {
        UnitDecl d;
        d.unit_name = u.value("unit_name", "");
        d.description = u.value("description", "");
        if (u.contains("code_location") && u["code_location"].is_string()) d.code_location = u["code_location"].get<std::string>();
        d.evidence = u.value("evidence", "unknown");
        if (u.contains("risk") && u["risk"].is_string() && !is_unknown(u["risk"].get<std::string>()))
            d.risk = risk_from_string(u["risk"].get<std::string>());
        d.reason = u.value("reason", "");
        return d;
    };
    for (const auto& u : j.value("reusable_units", Json::array())) a.reuse_units.push_back(unit(u));
    for (const auto& u : j.value("adaptable_units", Json::array())) {
        a.adapt_units.push_back(unit(u));
        a.diff_instructions[a.adapt_units.back().unit_name] = u.value("diff_instruction", "");
    }
    for (const auto& u : j.value("new_units", Json::array())) a.new_units.push_back(unit(u));
    return a;
}

Json to_json(const ApiUnit& u) {
    return {{"api_name", u.api_name},
            {"unit_name", u.unit_name},
            {"kind", std::string(to_string(u.kind))},
            {"source", u.source},
            {"signature", u.signature},
            {"dependencies", u.dependencies},
            {"code", u.code_body},
            {"code_location", u.code_location},
            {"applied_diff", u.applied_diff ? Json(*u.applied_diff) : Json(nullptr)},
            {"notes", u.notes},
            {"callability", {{"status", std::string(to_string(u.callability))}, {"reason", u.callability_reason}}}};
}

ApiUnit api_unit_from_json(const Json& j) {
    ApiUnit u;
    u.api_name = j.at("api_name").get<std::string>();
    u.unit_name = j.value("unit_name", u.api_name);
    u.kind = unit_kind_from_string(j.at("kind").get<std::string>());
    u.source = j.value("source", "");
    u.signature = j.value("signature", "");
    u.dependencies = j.value("dependencies", std::vector<std::string>{});
    u.code_body = j.value("code", "");
    u.code_location = j.value("code_location", "");
    if (j.contains("applied_diff") && j["applied_diff"].is_string()) u.applied_diff = j["applied_diff"].get<std::string>();
    u.notes = j.value("notes", "");
    if (j.contains("callability")) {
        auto status = j["callability"].value("status", "unvalidated");
        u.callability = status == "pass" ? Callability::pass : status == "fail" ? Callability::fail : Callability::unvalidated;
        u.callability_reason = j["callability"].value("reason", "");
    }
    return u;
}

// ---------------------------------------------------------------------------
// Code extraction

namespace {

std::vector<std::string> split_keep(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start + 1));
        start = nl + 1;
    }
    return lines;
}

std::size_t indent_of(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    return i;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r\n") == std::string::npos; }

bool defines(const std::string& line, std::size_t indent, const std::string& symbol) {
    if (indent_of(line) != indent) return false;
    std::string rest = line.substr(indent);
    for (const char* kw : {"async def ", "def ", "class "}) {
        std::string k(kw);
        if (rest.rfind(k, 0) == 0) {
            auto tail = rest.substr(k.size());
            tail.erase(0, tail.find_first_not_of(' '));
            if (tail.rfind(symbol, 0) == 0) {
                char next = tail.size() > symbol.size() ? tail[symbol.size()] : '\0';
                return next == '(' || next == ':' || next == ' ';
            }
        }
    }
    return false;
}

// [begin, end) line span of the block defining symbol at the given indent, searching within [from, to).
std::optional<std::pair<std::size_t, std::size_t>> find_block(const std::vector<std::string>& lines, std::size_t from,
                                                              std::size_t to, std::size_t indent, const std::string& symbol) {
    for (std::size_t i = from; i < to; ++i) {
        if (!defines(lines[i], indent, symbol)) continue;
        std::size_t begin = i;
        while (begin > from && indent_of(lines[begin - 1]) == indent && lines[begin - 1].substr(indent).rfind('@', 0) == 0)
            --begin;
        std::size_t end = i + 1;
        while (end < to && (blank(lines[end]) || indent_of(lines[end]) > indent)) ++end;
        while (end > i + 1 && blank(lines[end - 1])) --end;
        return std::make_pair(begin, end);
    }
    return std::nullopt;
}

} // namespace

std::string extract_location(const FileTree& tree, const std::string& location) {
    auto colon = location.find(':');
    std::string path = location.substr(0, colon);
    auto it = tree.find(path);
    if (it == tree.end()) throw ValidationError("unresolvable code_location '" + location + "': no file '" + path + "'");
    if (colon == std::string::npos) return it->second;

    std::string spec = location.substr(colon + 1);
    if (!spec.empty() && spec.front() == ':') spec.erase(0, 1);
    auto lines = split_keep(it->second);
    auto join = [&](std::size_t b, std::size_t e) {
        std::string out;
        for (std::size_t i = b; i < e; ++i) out += lines[i];
        if (!out.empty() && out.back() != '\n') out += '\n';
        return out;
    };

    static const std::regex range(R"(L?(\d+)(?:-L?(\d+))?)");
    std::smatch m;
    if (std::regex_match(spec, m, range)) {
        std::size_t b = std::stoul(m[1]);
        std::size_t e = m[2].matched ? std::stoul(m[2]) : b;
        if (b < 1 || e < b || e > lines.size())
            throw ValidationError("unresolvable code_location '" + location + "': line range out of bounds");
        return join(b - 1, e);
    }

    std::size_t from = 0, to = lines.size(), indent = 0;
    std::stringstream parts(spec);
    std::string symbol;
    std::optional<std::pair<std::size_t, std::size_t>> block;
    while (std::getline(parts, symbol, '.')) {
        if (block) {
            // descend: members are indented deeper than their owner
            from = block->first + 1;
            to = block->second;
            indent = std::string::npos;
            for (std::size_t i = from; i < to; ++i)
                if (!blank(lines[i])) {
                    indent = indent_of(lines[i]);
                    break;
                }
            if (indent == std::string::npos) break;
        }
        block = find_block(lines, from, to, indent, symbol);
        if (!block) break;
    }
    if (!block) throw ValidationError("unresolvable code_location '" + location + "': symbol not found");
    return join(block->first, block->second);
}

std::string TreeCodeProvider::extract(const std::string& neighbor_id, const std::string& location) const {
    auto it = trees_.find(neighbor_id);
    if (it == trees_.end()) throw ValidationError("no code available for neighbor '" + neighbor_id + "'");
    return extract_location(it->second, location);
}

// ---------------------------------------------------------------------------
// Encapsulation

namespace {

std::string first_signature(const std::string& body) {
    for (const auto& line : split_keep(body)) {
        auto s = line.substr(indent_of(line));
        if (s.rfind("def ", 0) == 0 || s.rfind("async def ", 0) == 0 || s.rfind("class ", 0) == 0) {
            while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
            if (!s.empty() && s.back() == ':') s.pop_back();
            return s;
        }
    }
    return "";
}

std::vector<std::string> imported_modules(const std::string& body) {
    static const std::regex import_re(R"(^\s*import\s+(.+?)\s*(#.*)?$)");
    static const std::regex from_re(R"(^\s*from\s+(\S+)\s+import\s+.+$)");
    std::set<std::string> mods;
    for (auto line : split_keep(body)) {
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
        std::smatch m;
        if (std::regex_match(line, m, from_re)) {
            std::string mod = m[1];
            if (!mod.empty() && mod.front() != '.') mods.insert(mod.substr(0, mod.find('.')));
        } else if (std::regex_match(line, m, import_re)) {
            std::stringstream names(m[1].str());
            std::string item;
            while (std::getline(names, item, ',')) {
                item.erase(0, item.find_first_not_of(' '));
                item = item.substr(0, item.find(' '));
                if (!item.empty()) mods.insert(item.substr(0, item.find('.')));
            }
        }
    }
    return {mods.begin(), mods.end()};
}

ApiUnit base_unit(const UnitDecl& d, UnitKind kind, const std::string& source) {
    ApiUnit u;
    u.api_name = d.unit_name;
    u.unit_name = d.unit_name;
    u.kind = kind;
    u.source = source;
    u.code_location = d.code_location.value_or("");
    return u;
}

} // namespace

std::string stub_body(const std::string& unit_name) {
    return "def " + unit_name + "(*args, **kwargs):\n"
           "    # TODO: implement " + unit_name + "\n"
           "    raise NotImplementedError(\"" + unit_name + " is not implemented\")\n";
}

std::vector<ApiUnit> encapsulate(const RelationAnnotation& annotation, const CodeProvider& code, Transformer& transformer) {
    const auto a = validate_annotation(annotation);
    std::vector<ApiUnit> out;

    auto sorted = [](std::vector<UnitDecl> v) {
        std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.unit_name < y.unit_name; });
        return v;
    };

    for (const auto& d : sorted(a.reuse_units)) {
        auto u = base_unit(d, UnitKind::reuse, a.neighbor_id);
        u.code_body = code.extract(a.neighbor_id, *d.code_location);
        u.signature = first_signature(u.code_body);
        u.dependencies = imported_modules(u.code_body);
        u.notes = "extracted verbatim from " + *d.code_location;
        out.push_back(std::move(u));
    }
    for (const auto& d : sorted(a.adapt_units)) {
        auto u = base_unit(d, UnitKind::adapt, a.neighbor_id);
        const std::string source = code.extract(a.neighbor_id, *d.code_location);
        const std::string& instruction = a.diff_instructions.at(d.unit_name);
        u.applied_diff = instruction;
        try {
            u.code_body = transformer.adapt({a.target_id, a.neighbor_id, d, source, instruction});
            u.signature = first_signature(u.code_body);
            u.dependencies = imported_modules(u.code_body);
            u.notes = "adapted from " + *d.code_location + ": " + instruction;
        } catch (const std::exception& e) {
            u.callability = Callability::fail;
            u.callability_reason = std::string("transformer: ") + e.what();
            u.notes = "adaptation failed";
        }
        out.push_back(std::move(u));
    }
    for (const auto& d : sorted(a.new_units)) {
        auto u = base_unit(d, UnitKind::new_unit, a.neighbor_id);
        u.code_body = stub_body(d.unit_name);
        u.signature = first_signature(u.code_body);
        u.notes = d.reason.empty() ? "placeholder stub" : "placeholder stub: " + d.reason;
        out.push_back(std::move(u));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Callability

namespace {

const std::set<std::string>& stdlib_modules() {
    static const std::set<std::string> mods{
        "abc",       "argparse", "collections", "contextlib", "copy",    "dataclasses", "datetime", "enum",
        "functools", "glob",     "hashlib",     "heapq",      "inspect", "io",          "itertools", "json",
        "logging",   "math",     "operator",    "os",         "pathlib", "pickle",      "random",   "re",
        "shutil",    "statistics", "string",    "sys",        "time",    "typing",      "warnings", "__future__"};
    return mods;
}

std::string top_module(std::string dep) {
    dep.erase(0, dep.find_first_not_of(' '));
    if (dep.rfind("from ", 0) == 0) dep = dep.substr(5);
    else if (dep.rfind("import ", 0) == 0) dep = dep.substr(7);
    dep.erase(0, dep.find_first_not_of(' '));
    dep = dep.substr(0, dep.find_first_of(" ,"));
    return dep.substr(0, dep.find('.'));
}

struct LogicalLine {
    std::size_t indent = 0;
    std::string text;  // comment-stripped, trimmed
    std::size_t lineno = 0;
};

// Splits Python source into logical lines, tracking strings and brackets.
std::optional<std::string> scan(const std::string& src, std::vector<LogicalLine>& out) {
    std::vector<char> stack;
    std::size_t lineno = 1;
    LogicalLine cur;
    bool at_line_start = true;
    std::size_t col_indent = 0;
    auto flush = [&] {
        auto& t = cur.text;
        auto e = t.find_last_not_of(" \t\r");
        t = e == std::string::npos ? "" : t.substr(0, e + 1);
        if (!t.empty()) out.push_back(cur);
        cur = LogicalLine{};
        at_line_start = true;
        col_indent = 0;
    };
    for (std::size_t i = 0; i < src.size(); ++i) {
        char c = src[i];
        if (at_line_start) {
            if (c == ' ' || c == '\t') {
                ++col_indent;
                continue;
            }
            at_line_start = false;
            cur.indent = col_indent;
            cur.lineno = lineno;
        }
        if (c == '#') {
            while (i + 1 < src.size() && src[i + 1] != '\n') ++i;
            continue;
        }
        if (c == '"' || c == '\'') {
            const bool triple = i + 2 < src.size() && src[i + 1] == c && src[i + 2] == c;
            const std::size_t start_line = lineno;
            std::size_t j = i + (triple ? 3 : 1);
            bool closed = false;
            for (; j < src.size(); ++j) {
                if (src[j] == '\\') {
                    ++j;
                    continue;
                }
                if (src[j] == '\n') {
                    if (!triple) break;
                    ++lineno;
                }
                if (src[j] == c && (!triple || (j + 2 < src.size() && src[j + 1] == c && src[j + 2] == c))) {
                    closed = true;
                    j += triple ? 2 : 0;
                    break;
                }
            }
            if (!closed) return "unterminated string starting on line " + std::to_string(start_line);
            cur.text += "\"\"";
            i = j;
            continue;
        }
        if (c == '(' || c == '[' || c == '{') stack.push_back(c);
        if (c == ')' || c == ']' || c == '}') {
            const char open = c == ')' ? '(' : c == ']' ? '[' : '{';
            if (stack.empty() || stack.back() != open)
                return std::string("unbalanced '") + c + "' on line " + std::to_string(lineno);
            stack.pop_back();
        }
        if (c == '\n') {
            ++lineno;
            if (stack.empty() && !(i > 0 && src[i - 1] == '\\')) flush();
            else cur.text += ' ';
            continue;
        }
        cur.text += c;
    }
    if (!stack.empty()) return std::string("unclosed '") + stack.back() + "'";
    flush();
    return std::nullopt;
}

bool starts_compound(const std::string& t) {
    static const std::regex kw(R"(^(async\s+def|def|class|if|elif|else|for|while|with|try|except|finally)\b.*)");
    return std::regex_match(t, kw);
}

} // namespace

std::set<std::string> provided_modules(const FileTree& tree) {
    std::set<std::string> out;
    for (const auto& [path, body] : tree) {
        const auto slash = path.find('/');
        if (slash == std::string::npos) {
            if (path.size() > 3 && path.compare(path.size() - 3, 3, ".py") == 0) out.insert(path.substr(0, path.size() - 3));
        } else {
            out.insert(path.substr(0, slash));
        }
        if (path != "requirements.txt") continue;
        std::istringstream in(body);
        for (std::string line; std::getline(in, line);) {
            line = line.substr(0, line.find('#'));
            const auto end = line.find_first_of("=<>!~[; \t\r");
            std::string name = line.substr(0, end);
            if (name.empty() || name[0] == '-') continue;
            for (auto& c : name) c = c == '-' || c == '.' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            out.insert(name);
        }
    }
    return out;
}

CallabilityCheck StaticCallabilityChecker::check(const ApiUnit& unit) {
    if (unit.code_body.empty()) return {false, "import/parse: empty body"};

    std::vector<LogicalLine> lines;
    if (auto err = scan(unit.code_body, lines)) return {false, "import/parse: " + *err};
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& l = lines[i];
        const bool opens = !l.text.empty() && l.text.back() == ':';
        if (starts_compound(l.text) && l.text.find(':') == std::string::npos)
            return {false, "import/parse: missing ':' on line " + std::to_string(l.lineno)};
        if (opens && (i + 1 == lines.size() || lines[i + 1].indent <= l.indent))
            return {false, "import/parse: expected an indented block after line " + std::to_string(l.lineno)};
        if (i > 0 && l.indent > lines[i - 1].indent && !(lines[i - 1].text.back() == ':'))
            return {false, "import/parse: unexpected indent on line " + std::to_string(l.lineno)};
        if (i == 0 && l.indent != 0) return {false, "import/parse: unexpected indent on line " + std::to_string(l.lineno)};
    }

    std::set<std::string> needed;
    for (const auto& d : unit.dependencies) needed.insert(top_module(d));
    for (const auto& mod : imported_modules(unit.code_body)) needed.insert(mod);
    for (const auto& mod : needed)
        if (!mod.empty() && !provided_.count(mod) && !stdlib_modules().count(mod))
            return {false, "import: undeclared dependency '" + mod + "'"};

    bool has_def = false;
    for (const auto& l : lines)
        if (l.indent == 0 && (l.text.rfind("def ", 0) == 0 || l.text.rfind("async def ", 0) == 0 || l.text.rfind("class ", 0) == 0))
            has_def = true;
    if (!has_def) return {false, "smoke: no callable top-level definition"};

    if (unit.kind == UnitKind::new_unit && unit.code_body.find("raise NotImplementedError") == std::string::npos)
        return {false, "smoke: stub does not signal not-implemented"};
    return {true, ""};
}

CallabilityCheck ExecutorCallabilityBackend::check(const ApiUnit& unit) {
    const std::string symbol = [&] {
        auto sig = first_signature(unit.code_body);
        auto name_start = sig.find(' ');
        if (sig.rfind("async ", 0) == 0) name_start = sig.find(' ', 6);
        if (name_start == std::string::npos) return std::string();
        auto rest = sig.substr(name_start + 1);
        return rest.substr(0, rest.find_first_of("(: "));
    }();
    if (symbol.empty()) return {false, "smoke: no callable top-level definition"};

    std::string smoke =
        "import importlib, json\n"
        "mod = importlib.import_module('api_unit')\n"
        "fn = getattr(mod, '" + symbol + "')\n"
        "assert callable(fn), 'not callable'\n";
    if (unit.kind == UnitKind::new_unit)
        smoke +=
            "try:\n"
            "    fn()\n"
            "    raise SystemExit('stub did not signal not-implemented')\n"
            "except NotImplementedError:\n"
            "    pass\n";
    smoke += "json.dump({'callable': 1}, open('metrics.json', 'w'))\n";

    Implementation harness;
    harness.files["api_unit.py"] = unit.code_body;
    harness.files["main.py"] = smoke;
    auto fb = executor_.execute(harness, {"callability_" + unit.source + "_" + unit.api_name, 0, timeout_});
    if (fb.status == ExecStatus::ok) return {true, ""};
    return {false, std::string(to_string(fb.status)) + ": " + fb.error_message.value_or(fb.logs)};
}

ApiUnit validate_callability(const ApiUnit& unit, CallabilityBackend& backend) {
    ApiUnit out = unit;
    if (unit.callability == Callability::fail) return out;  // e.g. transformer failure, keep its reason
    try {
        auto r = backend.check(unit);
        out.callability = r.pass ? Callability::pass : Callability::fail;
        out.callability_reason = r.reason;
    } catch (const ExecutorUnavailable& e) {
        out.callability = Callability::unvalidated;
        out.callability_reason = std::string("executor unavailable: ") + e.what();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation

double priority(const ApiUnit& candidate, double edge_weight, double beta) {
    if (candidate.kind == UnitKind::new_unit)
        throw ValidationError("priority: new unit '" + candidate.api_name + "' does not compete");
    return edge_weight + (candidate.kind == UnitKind::reuse ? beta : 0.0);
}

void add_candidates(CandidateMap& map, const std::vector<ApiUnit>& units, double edge_weight) {
    for (const auto& u : units) map[normalize_unit_name(u.unit_name)].emplace_back(u, edge_weight);
}

namespace {

struct Scored {
    const ApiUnit* unit;
    double weight;
    double p;
};

// strict "a ranks ahead of b"
bool ahead(const Scored& a, const Scored& b) {
    if (a.p != b.p) return a.p > b.p;
    const bool ar = a.unit->kind == UnitKind::reuse, br = b.unit->kind == UnitKind::reuse;
    if (ar != br) return ar;
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.unit->source != b.unit->source) return a.unit->source < b.unit->source;
    return a.unit->api_name < b.unit->api_name;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

bool near_miss(const std::string& a, const std::string& b) {
    auto squash = [](std::string s) {
        s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
        return s;
    };
    if (squash(a) == squash(b)) return true;
    if (a + "s" == b || b + "s" == a) return true;
    return std::min(a.size(), b.size()) >= 5 && edit_distance(a, b) <= 1;
}

} // namespace

AggregationResult aggregate_neighborhood(const CandidateMap& candidates, double beta) {
    if (candidates.empty()) throw ValidationError("aggregate_neighborhood: empty candidate map");
    if (!(beta >= 0.0)) throw ConfigError("aggregate_neighborhood: beta must be non-negative");

    AggregationResult result;
    for (const auto& [unit_name, list] : candidates) {
        std::vector<Scored> competing;
        std::vector<Alternative> excluded;
        const ApiUnit* stub = nullptr;
        bool had_reusable = false;
        for (const auto& [u, w] : list) {
            if (u.kind == UnitKind::new_unit) {
                if (!stub || u.source < stub->source) stub = &u;
                continue;
            }
            had_reusable = true;
            if (u.callability == Callability::pass) {
                competing.push_back({&u, w, priority(u, w, beta)});
            } else {
                Alternative alt{u.api_name, u.source, u.kind, w, std::nullopt,
                                std::string(to_string(u.callability)) +
                                    (u.callability_reason.empty() ? "" : ": " + u.callability_reason)};
                excluded.push_back(std::move(alt));
            }
        }

        if (competing.empty()) {
            Deferred d;
            d.unit_name = unit_name;
            d.reason = had_reusable ? "no callable api" : "no suitable api";
            d.next_step = "implement during execution-feedback refinement";
            d.stub_code = stub ? stub->code_body : stub_body(unit_name);
            result.deferred.push_back(std::move(d));
            continue;
        }

        std::sort(competing.begin(), competing.end(), ahead);
        const auto& best = competing.front();
        Selection s;
        s.unit_name = unit_name;
        s.chosen = *best.unit;
        s.priority = best.p;
        s.edge_weight = best.weight;
        s.reason = std::string(best.unit->kind == UnitKind::reuse ? "reuse" : "adapt") + " candidate from " +
                   best.unit->source + " has the highest priority";
        for (std::size_t i = 1; i < competing.size(); ++i)
            s.alternatives.push_back({competing[i].unit->api_name, competing[i].unit->source, competing[i].unit->kind,
                                      competing[i].weight, competing[i].p, std::nullopt});
        for (auto& alt : excluded) s.alternatives.push_back(std::move(alt));
        result.selections.emplace(unit_name, std::move(s));
    }

    std::vector<std::string> names;
    for (const auto& [name, list] : candidates) names.push_back(name);
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
            if (near_miss(names[i], names[j]))
                result.warnings.push_back("near-miss unit names '" + names[i] + "' and '" + names[j] + "' were kept separate");
    return result;
}

Json to_json(const AggregationResult& r) {
    Json selected = Json::array();
    for (const auto& [name, s] : r.selections) {
        Json alts = Json::array(), detail = Json::array();
        for (const auto& a : s.alternatives) {
            alts.push_back(a.source + "/" + a.api_name);
            Json d = {{"api_name", a.api_name}, {"source", a.source}, {"kind", std::string(to_string(a.kind))},
                      {"edge_weight", a.edge_weight}};
            d["score"] = a.priority ? Json(*a.priority) : Json(nullptr);
            if (a.excluded) d["excluded"] = *a.excluded;
            detail.push_back(d);
        }
        selected.push_back({{"unit_name", name},
                            {"chosen_api", s.chosen.api_name},
                            {"source", s.chosen.source},
                            {"kind", std::string(to_string(s.chosen.kind))},
                            {"score", s.priority},
                            {"edge_weight", s.edge_weight},
                            {"reason", s.reason},
                            {"alternatives", alts},
                            {"alternatives_detail", detail}});
    }
    Json deferred = Json::array();
    for (const auto& d : r.deferred)
        deferred.push_back({{"unit_name", d.unit_name}, {"reason", d.reason}, {"next_step", d.next_step}});
    return {{"selected", selected}, {"deferred", deferred}, {"warnings", r.warnings}};
}

Implementation assemble(const AggregationResult& r) {
    Implementation impl;
    for (const auto& [name, s] : r.selections) {
        const std::string file = "units/" + name + ".py";
        impl.files[file] = s.chosen.code_body;
        impl.units.push_back({name, s.chosen.kind, s.chosen.source, s.chosen.api_name, file});
    }
    for (const auto& d : r.deferred) {
        const std::string file = "units/" + d.unit_name + ".py";
        impl.files[file] = d.stub_code;
        impl.units.push_back({d.unit_name, UnitKind::new_unit, "stub", d.unit_name, file});
    }
    std::sort(impl.units.begin(), impl.units.end(), [](const auto& a, const auto& b) { return a.unit_name < b.unit_name; });
    return impl;
}

} // namespace reprograph::relation
