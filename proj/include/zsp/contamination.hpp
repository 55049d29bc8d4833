// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "zsp/task_registry.hpp"
#include "zsp/text.hpp"

namespace zsp {

struct TextDocument {
    std::string id;
    std::string text;
};

/// All text segments and gold_text of an example, newline separated.
/// Labels are not included; they are shared verbalizers, not content.
TextDocument document_of(const LabeledExample& example);

struct Hash128 {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;
    bool operator==(const Hash128&) const = default;
};

struct Hash128Hasher {
    std::size_t operator()(const Hash128& h) const noexcept { return static_cast<std::size_t>(h.lo ^ (h.hi * 31)); }
};

/// 128-bit FNV-1a over tokens[first, first + n), tokens delimited by 0x1F.
Hash128 window_hash(std::span<const std::string> tokens, std::size_t first, std::size_t n);

/// Hashed n-gram set of a protected corpus. Every hash keeps the location
/// of the windows that produced it so hits can be confirmed verbatim.
class NGramIndex {
public:
    struct Location {
        std::uint32_t doc;
        std::uint32_t offset;
    };

    NGramIndex(std::size_t n, text::TokenUnit unit);

    std::size_t n() const { return n_; }
    text::TokenUnit unit() const { return unit_; }
    /// Number of distinct n-grams.
    std::size_t size() const { return size_; }
    const std::vector<std::string>& doc_ids() const { return ids_; }

    /// Id of the protected document holding the earliest-indexed copy of
    /// tokens[first, first + n), if any.
    std::optional<std::string> lookup(std::span<const std::string> tokens, std::size_t first) const;

    /// Id of the protected document matched by the first contaminated
    /// window of `text`, if any.
    std::optional<std::string> first_match(std::string_view text) const;

private:
    friend NGramIndex build_ngram_index(std::span<const TextDocument>, std::size_t, text::TokenUnit, std::size_t);

    bool same_window(const Location& loc, std::span<const std::string> tokens, std::size_t first) const;

    std::size_t n_;
    text::TokenUnit unit_;
    std::size_t size_ = 0;
    std::vector<std::string> ids_;
    std::vector<std::vector<std::string>> docs_;
    std::unordered_map<Hash128, std::vector<Location>, Hash128Hasher> table_;
};

/// text::TokenUnit::Auto resolves over the whole corpus: characters when any
/// document contains CJK text, whitespace words otherwise.
NGramIndex build_ngram_index(std::span<const TextDocument> protected_corpus, std::size_t n,
                             text::TokenUnit unit = text::TokenUnit::Auto, std::size_t workers = 1);
NGramIndex build_ngram_index(std::span<const LabeledExample> protected_corpus, std::size_t n,
                             text::TokenUnit unit = text::TokenUnit::Auto, std::size_t workers = 1);

struct Removal {
    LabeledExample example;
    std::string matched_id;
};

struct FilterResult {
    std::vector<LabeledExample> kept;
    std::vector<Removal> removed;
};

/// Splits training examples by whether any of their n-token windows also
/// occurs in the protected corpus. Input order is preserved in both parts.
FilterResult contamination_filter(std::span<const LabeledExample> train, const NGramIndex& index,
                                  std::size_t workers = 1);

} // namespace zsp
