#include "reprograph/diff.hpp"

#include <charconv>
#include <vector>

#include "reprograph/error.hpp"

namespace reprograph {

namespace {

struct Lines {
    std::vector<std::string> lines;
    bool trailing_newline = true;
};

Lines split_lines(std::string_view text) {
    Lines out;
    if (text.empty()) return out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            out.lines.emplace_back(text.substr(start));
            out.trailing_newline = false;
            break;
        }
        out.lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

std::string join_lines(const Lines& l) {
    std::string out;
    for (std::size_t i = 0; i < l.lines.size(); ++i) {
        out += l.lines[i];
        if (i + 1 < l.lines.size() || l.trailing_newline) out += '\n';
    }
    return out;
}

[[noreturn]] void malformed(const std::string& why) { throw ValidationError("malformed diff: " + why); }

// "-l,s" or "-l" (s defaults to 1)
std::pair<long, long> parse_range(std::string_view s) {
    long start = 0, count = 1;
    auto comma = s.find(',');
    auto a = s.substr(0, comma);
    if (std::from_chars(a.data(), a.data() + a.size(), start).ec != std::errc{} ) malformed("bad hunk range");
    if (comma != std::string_view::npos) {
        auto b = s.substr(comma + 1);
        if (std::from_chars(b.data(), b.data() + b.size(), count).ec != std::errc{}) malformed("bad hunk range");
    }
    if (start < 0 || count < 0) malformed("negative hunk range");
    return {start, count};
}

} // namespace

bool is_unified_diff(std::string_view text) {
    return text.starts_with("--- ") || text.starts_with("@@") || text.find("\n@@ ") != std::string_view::npos;
}

std::string apply_unified_diff(std::string_view original, std::string_view diff) {
    const Lines src = split_lines(original);
    const Lines d = split_lines(diff);
    Lines out;
    out.trailing_newline = src.trailing_newline || src.lines.empty();


    std::size_t cursor = 0;  // next unconsumed source line (0-based)
    std::size_t i = 0;
    bool saw_hunk = false;
    while (i < d.lines.size()) {
        const std::string& line = d.lines[i];
        if (line.starts_with("--- ") || line.starts_with("+++ ") || line.starts_with("diff ") ||
            line.starts_with("index ")) {
            if (saw_hunk) malformed("file header after first hunk");
            ++i;
            continue;
        }
        if (!line.starts_with("@@ ")) malformed("expected hunk header, got '" + line + "'");
        saw_hunk = true;

        auto close = line.find(" @@", 3);
        if (close == std::string::npos) malformed("unterminated hunk header");
        std::string_view spec(line.data() + 3, close - 3);
        auto space = spec.find(' ');
        if (space == std::string_view::npos || spec[0] != '-' || spec[space + 1] != '+')
            malformed("bad hunk header '" + line + "'");
        auto [old_start, old_count] = parse_range(spec.substr(1, space - 1));
        auto [new_start, new_count] = parse_range(spec.substr(space + 2));
        (void)new_start;

        // Unified diffs use start 0 only for empty ranges.
        std::size_t hunk_pos = old_count == 0 ? static_cast<std::size_t>(old_start)
                                              : static_cast<std::size_t>(old_start - 1);
        if (old_count > 0 && old_start == 0) malformed("hunk starts at line 0");
        if (hunk_pos < cursor || hunk_pos > src.lines.size()) malformed("hunk out of order or out of range");
        for (; cursor < hunk_pos; ++cursor) out.lines.push_back(src.lines[cursor]);

        long seen_old = 0, seen_new = 0;
        char prev_tag = 0;
        bool new_side_unterminated = false;
        auto marker = [&] {
            if (prev_tag == '+' || prev_tag == ' ') new_side_unterminated = true;
        };
        ++i;
        while (i < d.lines.size() && (seen_old < old_count || seen_new < new_count)) {
            const std::string& h = d.lines[i];
            char tag = h.empty() ? ' ' : h[0];
            std::string body = h.empty() ? std::string() : h.substr(1);
            if (tag == '\\') {
                marker();
                ++i;
                continue;
            }
            if (tag == ' ' || tag == '-') {
                if (cursor >= src.lines.size() || src.lines[cursor] != body)
                    malformed("hunk does not apply at line " + std::to_string(cursor + 1));
                ++cursor;
                ++seen_old;
                if (tag == ' ') {
                    out.lines.push_back(body);
                    ++seen_new;
                }
            } else if (tag == '+') {
                out.lines.push_back(body);
                ++seen_new;
            } else {
                malformed("unexpected line in hunk: '" + h + "'");
            }
            prev_tag = tag;
            ++i;
        }
        if (seen_old != old_count || seen_new != new_count) malformed("hunk line counts do not match header");
        // "\\ No newline at end of file" directly after the hunk refers to its last line.
        while (i < d.lines.size() && d.lines[i].starts_with("\\")) {
            marker();
            ++i;
        }
        if (cursor == src.lines.size()) out.trailing_newline = !new_side_unterminated;
    }
    if (!saw_hunk) malformed("no hunks");
    for (; cursor < src.lines.size(); ++cursor) out.lines.push_back(src.lines[cursor]);
    if (out.lines.empty()) return {};
    return join_lines(out);
}

std::string full_rewrite_diff(std::string_view before, std::string_view after) {
    const Lines a = split_lines(before);
    const Lines b = split_lines(after);
    std::string out = "@@ -" + std::to_string(a.lines.empty() ? 0 : 1) + "," + std::to_string(a.lines.size()) +
                      " +" + std::to_string(b.lines.empty() ? 0 : 1) + "," + std::to_string(b.lines.size()) +
                      " @@\n";
    for (const auto& l : a.lines) out += "-" + l + "\n";
    if (!a.trailing_newline && !a.lines.empty()) out += "\\ No newline at end of file\n";
    for (const auto& l : b.lines) out += "+" + l + "\n";
    if (!b.trailing_newline && !b.lines.empty()) out += "\\ No newline at end of file\n";
    return out;
}

} // namespace reprograph
