// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace zsp::text {

/// Splits UTF-8 text into one string per code point. Malformed bytes are
/// passed through as single-byte units.
std::vector<std::string> codepoints(std::string_view s);

/// Decodes the code point starting at `s[pos]`; advances `pos`.
char32_t decode_next(std::string_view s, std::size_t& pos);

bool is_cjk(char32_t cp);
bool is_space(char32_t cp);
bool contains_cjk(std::string_view s);

std::size_t length(std::string_view s);

enum class TokenUnit { Auto, Char, Word };

TokenUnit parse_token_unit(std::string_view name);
std::string_view to_string(TokenUnit unit);

/// Char: every non-whitespace code point is a token.
/// Word: maximal runs of non-whitespace.
/// Auto: Char when the text holds any CJK code point, Word otherwise.
std::vector<std::string> tokenize(std::string_view s, TokenUnit unit);

/// Resolves Auto against the union of both strings, so prediction and
/// reference are always tokenized the same way.
TokenUnit resolve_unit(TokenUnit unit, std::string_view a, std::string_view b);

std::string_view trim(std::string_view s);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

void replace_all(std::string& s, std::string_view from, std::string_view to);

} // namespace zsp::text
