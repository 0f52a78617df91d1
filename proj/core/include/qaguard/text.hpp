#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qaguard::text {

/// One whitespace-delimited token with its byte offsets in the source string.
struct TokenSpan {
    std::string_view token;
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Decodes the code point starting at `pos` and advances `pos` past it.
/// Invalid sequences decode as U+FFFD and consume one byte.
char32_t decode_utf8(std::string_view s, std::size_t& pos);

bool is_space(char32_t cp);

/// ASCII punctuation plus the common Unicode punctuation blocks
/// (Latin-1 punctuation, General Punctuation, CJK symbols, fullwidth forms).
bool is_punctuation(char32_t cp);

/// Letters, digits and any non-ASCII code point that is neither space nor punctuation.
bool is_word_char(char32_t cp);

std::string ascii_lower(std::string_view s);

bool iequals_ascii(std::string_view a, std::string_view b);

/// Splits on ASCII/Unicode whitespace, keeping byte offsets.
std::vector<TokenSpan> whitespace_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// 64-bit FNV-1a; stable across platforms, used for seeds and config hashes.
std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 14695981039346656037ULL);

/// Mixes a global seed with a string key (e.g. an example id) into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);


/// Byte offset of the first whole-word, ASCII-case-insensitive occurrence of `needle`
/// in `haystack` at or after `from`, or npos. `haystack_lower` must be
/// ascii_lower(haystack) (callers usually search one text for many needles).
std::size_t find_word(std::string_view haystack_lower, std::string_view needle,
                      std::size_t from = 0);

}  // namespace qaguard::text
