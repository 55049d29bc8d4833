// SPDX-License-Identifier: Apache-2.0

#include "zsp/contamination.hpp"

#include <limits>

#include "zsp/error.hpp"
#include "zsp/parallel.hpp"

namespace zsp {

namespace {

using u128 = unsigned __int128;

constexpr u128 kFnvOffset = (static_cast<u128>(0x6c62272e07bb0142ULL) << 64) | 0x62b821756295c58dULL;
constexpr u128 kFnvPrime = (static_cast<u128>(0x0000000001000000ULL) << 64) | 0x000000000000013bULL;

} // namespace

TextDocument document_of(const LabeledExample& example)
{
    TextDocument doc{example.id, {}};
    for (const auto& s : example.segments) {
        if (!doc.text.empty()) {
            doc.text += '\n';
        }
        doc.text += s;
    }
    if (example.gold_text) {
        doc.text += '\n';
        doc.text += *example.gold_text;
    }
    return doc;
}

Hash128 window_hash(std::span<const std::string> tokens, std::size_t first, std::size_t n)
{
    u128 h = kFnvOffset;
    for (std::size_t i = first; i < first + n; ++i) {
        for (unsigned char c : tokens[i]) {
            h ^= c;
            h *= kFnvPrime;
        }
        h ^= 0x1F;
        h *= kFnvPrime;
    }
    return {static_cast<std::uint64_t>(h >> 64), static_cast<std::uint64_t>(h)};
}

NGramIndex::NGramIndex(std::size_t n, text::TokenUnit unit) : n_(n), unit_(unit)
{
    if (n < 1) {
        throw ConfigError("n-gram size must be >= 1");
    }
    if (unit == text::TokenUnit::Auto) {
        throw ConfigError("n-gram index needs a concrete token unit");
    }
}

bool NGramIndex::same_window(const Location& loc, std::span<const std::string> tokens, std::size_t first) const
{
    const auto& doc = docs_[loc.doc];
    for (std::size_t i = 0; i < n_; ++i) {
        if (doc[loc.offset + i] != tokens[first + i]) {
            return false;
        }
    }
    return true;
}

std::optional<std::string> NGramIndex::lookup(std::span<const std::string> tokens, std::size_t first) const
{
    auto it = table_.find(window_hash(tokens, first, n_));
    if (it == table_.end()) {
        return std::nullopt;
    }
    for (const auto& loc : it->second) {
        if (same_window(loc, tokens, first)) {
            return ids_[loc.doc];
        }
    }
    return std::nullopt;
}

std::optional<std::string> NGramIndex::first_match(std::string_view text) const
{
    auto tokens = text::tokenize(text, unit_);
    if (tokens.size() < n_) {
        return std::nullopt;
    }
    for (std::size_t i = 0; i + n_ <= tokens.size(); ++i) {
        if (auto hit = lookup(tokens, i)) {
            return hit;
        }
    }
    return std::nullopt;
}

NGramIndex build_ngram_index(std::span<const TextDocument> protected_corpus, std::size_t n, text::TokenUnit unit,
                             std::size_t workers)
{
    if (unit == text::TokenUnit::Auto) {
        unit = text::TokenUnit::Word;
        for (const auto& d : protected_corpus) {
            if (text::contains_cjk(d.text)) {
                unit = text::TokenUnit::Char;
                break;
            }
        }
    }
    if (protected_corpus.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw DataError("protected corpus too large");
    }
    NGramIndex index(n, unit);
    const std::size_t count = protected_corpus.size();
    index.docs_.resize(count);
    std::vector<std::vector<Hash128>> hashes(count);
    parallel_for(count, workers, [&](std::size_t d) {
        index.docs_[d] = text::tokenize(protected_corpus[d].text, unit);
        const auto& toks = index.docs_[d];
        for (std::size_t i = 0; i + n <= toks.size(); ++i) {
            hashes[d].push_back(window_hash(toks, i, n));
        }
    });
    // Serial merge in document order so lookups report the earliest copy.
    for (std::size_t d = 0; d < count; ++d) {
        index.ids_.push_back(protected_corpus[d].id);
        for (std::size_t i = 0; i < hashes[d].size(); ++i) {
            NGramIndex::Location loc{static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(i)};
            auto& bucket = index.table_[hashes[d][i]];
            bool seen = false;
            for (const auto& other : bucket) {
                if (index.same_window(other, index.docs_[d], i)) {
                    seen = true;
                    break;
                }
            }
            if (!seen) {
                bucket.push_back(loc);
                ++index.size_;
            }
        }
    }
    return index;
}

NGramIndex build_ngram_index(std::span<const LabeledExample> protected_corpus, std::size_t n, text::TokenUnit unit,
                             std::size_t workers)
{
    std::vector<TextDocument> docs;
    docs.reserve(protected_corpus.size());
    for (const auto& ex : protected_corpus) {
        docs.push_back(document_of(ex));
    }
    return build_ngram_index(docs, n, unit, workers);
}

FilterResult contamination_filter(std::span<const LabeledExample> train, const NGramIndex& index, std::size_t workers)
{
    std::vector<std::optional<std::string>> hits(train.size());
    parallel_for(train.size(), workers,
                 [&](std::size_t i) { hits[i] = index.first_match(document_of(train[i]).text); });
    FilterResult result;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (hits[i]) {
            result.removed.push_back({train[i], *hits[i]});
        } else {
            result.kept.push_back(train[i]);
        }
    }
    return result;
}

} // namespace zsp
