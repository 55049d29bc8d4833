// SPDX-License-Identifier: Apache-2.0

#include "zsp/text.hpp"

#include "zsp/error.hpp"

namespace zsp::text {

char32_t decode_next(std::string_view s, std::size_t& pos)
{
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char b0 = byte(pos);
    std::size_t len = 1;
    char32_t cp = b0;
    if (b0 >= 0xF0 && b0 < 0xF8) {
        len = 4;
        cp = b0 & 0x07;
    } else if (b0 >= 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if (b0 >= 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    }
    if (len > 1) {
        if (pos + len > s.size()) {
            ++pos;
            return b0;
        }
        for (std::size_t i = 1; i < len; ++i) {
            unsigned char b = byte(pos + i);
            if ((b & 0xC0) != 0x80) {
                ++pos;
                return b0;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
    }
    pos += len;
    return cp;
}

std::vector<std::string> codepoints(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t start = pos;
        decode_next(s, pos);
        out.emplace_back(s.substr(start, pos - start));
    }
    return out;
}

bool is_cjk(char32_t cp)
{
    return (cp >= 0x4E00 && cp <= 0x9FFF)     // unified ideographs
        || (cp >= 0x3400 && cp <= 0x4DBF)     // extension A
        || (cp >= 0x20000 && cp <= 0x2FA1F)   // extensions B.. and compatibility supplement
        || (cp >= 0xF900 && cp <= 0xFAFF)     // compatibility ideographs
        || (cp >= 0x3000 && cp <= 0x30FF)     // symbols, punctuation, kana
        || (cp >= 0xAC00 && cp <= 0xD7AF)     // hangul syllables
        || (cp >= 0xFF00 && cp <= 0xFFEF);    // full-width forms
}

bool is_space(char32_t cp)
{
    switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
    case 0x205F: case 0x3000: case 0xFEFF:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200B;
    }
}

bool contains_cjk(std::string_view s)
{
    std::size_t pos = 0;
    while (pos < s.size()) {
        if (is_cjk(decode_next(s, pos))) {
            return true;
        }
    }
    return false;
}

std::size_t length(std::string_view s)
{
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos < s.size()) {
        decode_next(s, pos);
        ++n;
    }
    return n;
}

TokenUnit parse_token_unit(std::string_view name)
{
    if (name == "auto") return TokenUnit::Auto;
    if (name == "char") return TokenUnit::Char;
    if (name == "word") return TokenUnit::Word;
    throw ConfigError("unknown token unit '" + std::string(name) + "' (expected auto|char|word)");
}

std::string_view to_string(TokenUnit unit)
{
    switch (unit) {
    case TokenUnit::Auto: return "auto";
    case TokenUnit::Char: return "char";
    case TokenUnit::Word: return "word";
    }
    return "auto";
}

std::vector<std::string> tokenize(std::string_view s, TokenUnit unit)
{
    if (unit == TokenUnit::Auto) {
        unit = contains_cjk(s) ? TokenUnit::Char : TokenUnit::Word;
    }
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    std::string word;
    while (pos < s.size()) {
        std::size_t start = pos;
        char32_t cp = decode_next(s, pos);
        bool space = is_space(cp);
        if (unit == TokenUnit::Char) {
            if (!space) {
                tokens.emplace_back(s.substr(start, pos - start));
            }
            continue;
        }
        if (space) {
            if (!word.empty()) {
                tokens.push_back(std::move(word));
                word.clear();
            }
        } else {
            word.append(s.substr(start, pos - start));
        }
    }
    if (!word.empty()) {
        tokens.push_back(std::move(word));
    }
    return tokens;
}

TokenUnit resolve_unit(TokenUnit unit, std::string_view a, std::string_view b)
{
    if (unit != TokenUnit::Auto) {
        return unit;
    }
    return (contains_cjk(a) || contains_cjk(b)) ? TokenUnit::Char : TokenUnit::Word;
}

std::string_view trim(std::string_view s)
{
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end) {
        std::size_t pos = begin;
        if (!is_space(decode_next(s, pos))) {
            break;
        }
        begin = pos;
    }
    // Walk back over trailing whitespace one code point at a time.
    while (end > begin) {
        std::size_t start = end - 1;
        while (start > begin && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) {
            --start;
        }
        std::size_t pos = start;
        if (!is_space(decode_next(s, pos))) {
            break;
        }
        end = start;
    }
    return s.substr(begin, end - begin);
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle)
{
    if (needle.empty()) {
        return 0;
    }
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

void replace_all(std::string& s, std::string_view from, std::string_view to)
{
    if (from.empty()) {
        return;
    }
    std::string out;
    std::size_t pos = 0;
    for (auto hit = s.find(from); hit != std::string::npos; hit = s.find(from, pos)) {
        out.append(s, pos, hit - pos);
        out.append(to);
        pos = hit + from.size();
    }
    out.append(s, pos);
    s = std::move(out);
}

} // namespace zsp::text
