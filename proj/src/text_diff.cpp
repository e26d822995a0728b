#include "lsfs/text_diff.hpp"

#include "lsfs/error.hpp"

#include <fmt/format.h>

namespace lsfs {

namespace {

// Past this many DP cells the middle section is reported as one changed
// hunk rather than minimized.
constexpr std::size_t kMaxLcsCells = 16'000'000;

std::string_view kind_name(DiffHunk::Kind k) {
    switch (k) {
    case DiffHunk::Kind::Added: return "added";
    case DiffHunk::Kind::Removed: return "removed";
    case DiffHunk::Kind::Changed: return "changed";
    }
    return "changed";
}

void strip_terminator(std::string& line) {
    if (!line.empty() && line.back() == '\n') {
        line.pop_back();
    }
}

} // namespace

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start + 1));
        start = nl + 1;
    }
    return lines;
}

TextDiff compare_change(std::string_view old_text, std::string_view new_text) {
    const auto a = split_lines(old_text);
    const auto b = split_lines(new_text);

    std::size_t prefix = 0;
    while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) {
        ++prefix;
    }
    std::size_t suffix = 0;
    while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
           a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
        ++suffix;
    }
    const std::size_t n = a.size() - prefix - suffix;
    const std::size_t m = b.size() - prefix - suffix;

    // keep[i] / keep_b[j]: line is part of the common subsequence.
    std::vector<bool> keep_a(n, false);
    std::vector<bool> keep_b(m, false);
    if (n > 0 && m > 0 && n * m <= kMaxLcsCells) {
        std::vector<std::uint32_t> dp((n + 1) * (m + 1), 0);
        auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return dp[i * (m + 1) + j]; };
        for (std::size_t i = n; i-- > 0;) {
            for (std::size_t j = m; j-- > 0;) {
                at(i, j) = a[prefix + i] == b[prefix + j] ? at(i + 1, j + 1) + 1 : std::max(at(i + 1, j), at(i, j + 1));
            }
        }
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < n && j < m) {
            if (a[prefix + i] == b[prefix + j]) {
                keep_a[i++] = true;
                keep_b[j++] = true;
            } else if (at(i + 1, j) >= at(i, j + 1)) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    TextDiff diff;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < n || j < m) {
        if (i < n && j < m && keep_a[i] && keep_b[j]) {
            ++i;
            ++j;
            continue;
        }
        DiffHunk h;
        h.old_start = prefix + i + 1;
        h.new_start = prefix + j + 1;
        while (i < n && !keep_a[i]) {
            h.old_lines.push_back(a[prefix + i++]);
        }
        while (j < m && !keep_b[j]) {
            h.new_lines.push_back(b[prefix + j++]);
        }
        h.kind = h.old_lines.empty() ? DiffHunk::Kind::Added
                 : h.new_lines.empty() ? DiffHunk::Kind::Removed
                                       : DiffHunk::Kind::Changed;
        diff.hunks.push_back(std::move(h));
    }
    return diff;
}

std::string apply_diff(std::string_view old_text, const TextDiff& diff) {
    const auto a = split_lines(old_text);
    std::string out;
    std::size_t cursor = 0; // 0-based index into a
    for (const auto& h : diff.hunks) {
        if (h.old_start == 0 || h.old_start - 1 < cursor || h.old_start - 1 > a.size()) {
            throw Error(ErrorCode::InvalidArgument, "diff hunk out of order or out of range");
        }
        for (; cursor < h.old_start - 1; ++cursor) {
            out += a[cursor];
        }
        for (const auto& line : h.old_lines) {
            if (cursor >= a.size() || a[cursor] != line) {
                throw Error(ErrorCode::InvalidArgument, "diff does not match the old text");
            }
            ++cursor;
        }
        for (const auto& line : h.new_lines) {
            out += line;
        }
    }
    for (; cursor < a.size(); ++cursor) {
        out += a[cursor];
    }
    return out;
}

std::string render_diff(const TextDiff& diff) {
    std::string out;
    for (const auto& h : diff.hunks) {
        out += fmt::format("@@ -{},{} +{},{} @@ {}\n", h.old_start, h.old_lines.size(), h.new_start,
                           h.new_lines.size(), kind_name(h.kind));
        for (auto line : h.old_lines) {
            strip_terminator(line);
            out += "-" + line + "\n";
        }
        for (auto line : h.new_lines) {
            strip_terminator(line);
            out += "+" + line + "\n";
        }
    }
    return out;
}

nlohmann::json to_json(const TextDiff& diff) {
    auto arr = nlohmann::json::array();
    for (const auto& h : diff.hunks) {
        arr.push_back({{"kind", kind_name(h.kind)},
                       {"old_start", h.old_start},
                       {"new_start", h.new_start},
                       {"old_lines", h.old_lines},
                       {"new_lines", h.new_lines}});
    }
    return arr;
}

} // namespace lsfs
