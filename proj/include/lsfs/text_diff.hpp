#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lsfs {

/// One contiguous edit. Line numbers are 1-based; for a pure insertion
/// `old_start` is the old line the new lines are inserted before.
struct DiffHunk {
    enum class Kind { Added, Removed, Changed };

    Kind kind = Kind::Changed;
    std::size_t old_start = 1;
    std::size_t new_start = 1;
    std::vector<std::string> old_lines; // with line terminators
    std::vector<std::string> new_lines;

    bool operator==(const DiffHunk&) const = default;
};

struct TextDiff {
    std::vector<DiffHunk> hunks;

    bool empty() const { return hunks.empty(); }
    bool operator==(const TextDiff&) const = default;
};

/// Lines keep their '\n' so splitting and joining is lossless.
std::vector<std::string> split_lines(std::string_view text);

/// Deterministic line diff (longest common subsequence, earliest match).
TextDiff compare_change(std::string_view old_text, std::string_view new_text);

/// Reconstructs the new text; throws InvalidArgument when `diff` does not
/// fit `old_text`.
std::string apply_diff(std::string_view old_text, const TextDiff& diff);

/// Human-readable rendering: one "@@ -a,b +c,d @@" header per hunk followed
/// by "-" and "+" lines.
std::string render_diff(const TextDiff& diff);

nlohmann::json to_json(const TextDiff& diff);

} // namespace lsfs
