#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lsfs {

std::string sha256_hex(std::string_view data);

/// Hex string of `n_bytes` from the OS CSPRNG.
std::string random_token_hex(std::size_t n_bytes);

/// ASCII-only case folding; non-ASCII UTF-8 bytes pass through unchanged.
std::string ascii_lower(std::string_view s);

bool contains_icase(std::string_view haystack, std::string_view needle);

bool is_valid_utf8(std::string_view s);

/// Longest prefix of at most `max_bytes` that does not split a code point.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes);

std::string trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

} // namespace lsfs
