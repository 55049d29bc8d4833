// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations shared by unit and acceptance tests.

#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "zsp/contamination.hpp"
#include "zsp/text.hpp"

namespace zsp::testing {

/// Random whitespace-separated documents over a tiny alphabet so that
/// shared n-grams are common.
inline std::vector<LabeledExample> random_corpus(std::mt19937_64& rng, const std::string& prefix, std::size_t docs,
                                                 std::size_t max_len, int alphabet = 5)
{
    std::vector<LabeledExample> out;
    for (std::size_t d = 0; d < docs; ++d) {
        std::string text;
        std::size_t len = rng() % (max_len + 1);
        for (std::size_t i = 0; i < len; ++i) {
            text += (i ? " " : "");
            text += static_cast<char>('a' + rng() % alphabet);
        }
        out.push_back({prefix + std::to_string(d), {text}, std::nullopt, "z"});
    }
    return out;
}

/// For every training example, the id of the first protected document that
/// shares the earliest matching window, found by comparing token windows
/// directly.
inline std::vector<std::optional<std::string>> brute_force_matches(const std::vector<LabeledExample>& train,
                                                                   const std::vector<LabeledExample>& test,
                                                                   std::size_t n, text::TokenUnit unit)
{
    std::vector<std::vector<std::string>> test_tokens;
    for (const auto& t : test) {
        test_tokens.push_back(text::tokenize(document_of(t).text, unit));
    }
    std::vector<std::optional<std::string>> out;
    for (const auto& ex : train) {
        auto toks = text::tokenize(document_of(ex).text, unit);
        std::optional<std::string> hit;
        for (std::size_t i = 0; !hit && i + n <= toks.size(); ++i) {
            for (std::size_t d = 0; !hit && d < test.size(); ++d) {
                const auto& other = test_tokens[d];
                for (std::size_t j = 0; j + n <= other.size(); ++j) {
                    if (std::equal(toks.begin() + i, toks.begin() + i + n, other.begin() + j)) {
                        hit = test[d].id;
                        break;
                    }
                }
            }
        }
        out.push_back(hit);
    }
    return out;
}

} // namespace zsp::testing
