// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "support.hpp"
#include "zsp/contamination.hpp"
#include "zsp/error.hpp"

using namespace zsp;

namespace {

LabeledExample doc(std::string id, std::string text)
{
    return {std::move(id), {std::move(text)}, std::nullopt, std::nullopt};
}

std::set<std::string> removed_ids(const FilterResult& r)
{
    std::set<std::string> out;
    for (const auto& x : r.removed) {
        out.insert(x.example.id);
    }
    return out;
}

} // namespace

TEST(NGramIndex, HandEnumeratedWindows)
{
    std::vector<TextDocument> docs{{"d", "a b c d"}};
    auto index = build_ngram_index(docs, 3, text::TokenUnit::Word);
    EXPECT_EQ(index.size(), 2u);
    EXPECT_EQ(index.first_match("x a b c"), "d");
    EXPECT_EQ(index.first_match("b c d"), "d");
    EXPECT_FALSE(index.first_match("a b d"));
}

TEST(NGramIndex, ShortDocsAndDuplicates)
{
    std::vector<TextDocument> short_docs{{"s", "a b"}};
    EXPECT_EQ(build_ngram_index(short_docs, 3, text::TokenUnit::Word).size(), 0u);
    std::vector<TextDocument> dup{{"x", "a b c a b c"}, {"y", "a b c"}};
    // Windows: abc, bca, cab (abc repeats within x and again in y).
    EXPECT_EQ(build_ngram_index(dup, 3, text::TokenUnit::Word).size(), 3u);
    EXPECT_THROW(build_ngram_index(dup, 0, text::TokenUnit::Word), ConfigError);
}

TEST(NGramIndex, AutoUnitFollowsCorpusScript)
{
    std::vector<TextDocument> zh{{"z", "今天天气很好"}};
    EXPECT_EQ(build_ngram_index(zh, 3).unit(), text::TokenUnit::Char);
    std::vector<TextDocument> en{{"e", "the weather is fine"}};
    EXPECT_EQ(build_ngram_index(en, 3).unit(), text::TokenUnit::Word);
}

TEST(NGramIndex, DocumentConcatenatesSegmentsAndGoldText)
{
    LabeledExample ex{"e", {"first", "second"}, std::nullopt, "gold"};
    EXPECT_EQ(document_of(ex).text, "first\nsecond\ngold");
    LabeledExample cls{"c", {"only"}, "label", std::nullopt};
    EXPECT_EQ(document_of(cls).text, "only");
}

TEST(Filter, ShortTrainingExamplesNeverRemoved)
{
    std::mt19937_64 rng(1);
    auto test = zsp::testing::random_corpus(rng, "t", 20, 28);
    auto train = zsp::testing::random_corpus(rng, "r", 50, 28);
    auto index = build_ngram_index(test, 30);
    auto r = contamination_filter(train, index);
    EXPECT_TRUE(r.removed.empty());
    EXPECT_EQ(r.kept.size(), train.size());
}

TEST(Filter, SharedThirtyCharacterSpanIsRemoved)
{
    const std::string span = "这是一段足够长的中文文本用来测试三十个字符的重叠检测是否能够正确工作";
    ASSERT_GE(text::length(span), 30u);
    std::vector<LabeledExample> test{doc("t0", "前缀" + span + "后缀")};
    std::vector<LabeledExample> train{doc("r0", "开头" + span), doc("r1", "完全无关的一句话")};
    auto r = contamination_filter(train, build_ngram_index(test, 30));
    ASSERT_EQ(r.removed.size(), 1u);
    EXPECT_EQ(r.removed[0].example.id, "r0");
    EXPECT_EQ(r.removed[0].matched_id, "t0");
    EXPECT_EQ(r.kept.size(), 1u);
}

TEST(Filter, MatchesBruteForceOracle)
{
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 40; ++trial) {
        auto test = zsp::testing::random_corpus(rng, "t", 1 + rng() % 8, 12);
        auto train = zsp::testing::random_corpus(rng, "r", 1 + rng() % 20, 12);
        auto index = build_ngram_index(test, 4, text::TokenUnit::Word);
        auto r = contamination_filter(train, index, 1 + trial % 4);
        auto oracle = zsp::testing::brute_force_matches(train, test, 4, text::TokenUnit::Word);
        std::size_t ri = 0, ki = 0;
        for (std::size_t i = 0; i < train.size(); ++i) {
            if (oracle[i]) {
                ASSERT_LT(ri, r.removed.size());
                EXPECT_EQ(r.removed[ri].example.id, train[i].id);
                EXPECT_EQ(r.removed[ri].matched_id, *oracle[i]);
                ++ri;
            } else {
                ASSERT_LT(ki, r.kept.size());
                EXPECT_EQ(r.kept[ki].id, train[i].id);
                ++ki;
            }
        }
        EXPECT_EQ(ri, r.removed.size());
        EXPECT_EQ(ki, r.kept.size());
    }
}

TEST(Filter, IdempotentAndOrderIndependent)
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        auto test = zsp::testing::random_corpus(rng, "t", 5, 10);
        auto train = zsp::testing::random_corpus(rng, "r", 20, 10);
        auto index = build_ngram_index(test, 4, text::TokenUnit::Word);
        auto r = contamination_filter(train, index);
        EXPECT_TRUE(contamination_filter(r.kept, index).removed.empty());
        auto shuffled = train;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_EQ(removed_ids(contamination_filter(shuffled, index)), removed_ids(r));
    }
}

TEST(Hashing, WindowHashDistinguishesTokenBoundaries)
{
    std::vector<std::string> a{"ab", "c"};
    std::vector<std::string> b{"a", "bc"};
    EXPECT_FALSE(window_hash(a, 0, 2) == window_hash(b, 0, 2));
}
