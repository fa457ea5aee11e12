#pragma once
// Minimal unified-diff support for repair-plan edits. Hunks must apply exactly
// at their stated position; there is no fuzz.

#include <string>
#include <string_view>

namespace reprograph {

// True if text looks like a unified diff (a "--- " header or an "@@" hunk).
bool is_unified_diff(std::string_view text);

// Throws ValidationError("malformed diff: ...") on bad syntax or when a hunk
// does not match the original.
std::string apply_unified_diff(std::string_view original, std::string_view diff);

// A single-hunk diff that rewrites `before` into `after` in full.
std::string full_rewrite_diff(std::string_view before, std::string_view after);

} // namespace reprograph
