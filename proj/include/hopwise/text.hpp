#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hopwise::text {

std::string_view trim(std::string_view s);
/// ASCII lower-casing; bytes >= 0x80 pass through untouched.
std::string casefold(std::string_view s);
/// Runs of ASCII whitespace become a single space; leading/trailing whitespace removed.
std::string collapse_whitespace(std::string_view s);
/// casefold + collapse_whitespace.
std::string normalize_name(std::string_view s);

std::vector<std::string_view> split_whitespace(std::string_view s);
std::size_t word_count(std::string_view s);

bool is_space(char c);
/// Word characters for boundary checks: ASCII alphanumerics, '_' and any non-ASCII byte.
bool is_word_byte(char c);

/// Case-insensitive (ASCII) search for `needle` in `haystack` starting at `from`.
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);
std::size_t irfind(std::string_view haystack, std::string_view needle);

/// True when `needle` occurs in `haystack` bounded on both sides by non-word bytes.
bool contains_word_bounded(std::string_view haystack, std::string_view needle);

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Replaces every `{key}` with its value; unknown placeholders are left as-is.
std::string fill_template(std::string_view tmpl,
                          const std::vector<std::pair<std::string, std::string>>& values);

} // namespace hopwise::text
