// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "support.hpp"
#include "zsp/dataset.hpp"
#include "zsp/error.hpp"

using namespace zsp;
using zsp::testing::classification_task;
using zsp::testing::labeled;

namespace {

std::vector<LabeledExample> corpus(const std::vector<std::string>& labels, const std::vector<std::size_t>& sizes)
{
    std::vector<LabeledExample> out;
    for (std::size_t l = 0; l < labels.size(); ++l) {
        for (std::size_t i = 0; i < sizes[l]; ++i) {
            out.push_back(labeled(labels[l] + "-" + std::to_string(i), "text " + std::to_string(i), labels[l]));
        }
    }
    // Interleave classes so corpus order is not grouped by label.
    std::mt19937_64 rng(1);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

std::map<std::string, std::size_t> per_class(const std::vector<LabeledExample>& xs)
{
    std::map<std::string, std::size_t> m;
    for (const auto& x : xs) {
        ++m[*x.gold_label];
    }
    return m;
}

std::vector<LabeledExample> generation_corpus(std::size_t n)
{
    std::vector<LabeledExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(zsp::testing::with_text("g" + std::to_string(i), "doc " + std::to_string(i), "t"));
    }
    return out;
}

std::vector<std::string> ids(const std::vector<LabeledExample>& xs)
{
    std::vector<std::string> out;
    for (const auto& x : xs) {
        out.push_back(x.id);
    }
    return out;
}

} // namespace

TEST(SamplePool, BinaryTaskCapsPerClass)
{
    auto task = classification_task("senti", {"neg", "pos"});
    auto ex = corpus({"neg", "pos"}, {1000, 1000});
    auto pool = sample_training_pool(task, ex, {}, 1);
    EXPECT_EQ(pool.size(), 256u);
    EXPECT_EQ(per_class(pool), (std::map<std::string, std::size_t>{{"neg", 128}, {"pos", 128}}));
}

TEST(SamplePool, SmallClassTakenWhole)
{
    auto task = classification_task("senti", {"neg", "pos"});
    auto ex = corpus({"neg", "pos"}, {50, 300});
    auto pool = sample_training_pool(task, ex, {}, 1);
    EXPECT_EQ(per_class(pool), (std::map<std::string, std::size_t>{{"neg", 50}, {"pos", 128}}));
}

TEST(SamplePool, SeedDeterminism)
{
    auto task = classification_task("senti", {"neg", "pos"});
    auto ex = corpus({"neg", "pos"}, {400, 400});
    auto a = sample_training_pool(task, ex, {}, 7);
    auto b = sample_training_pool(task, ex, {}, 7);
    auto c = sample_training_pool(task, ex, {}, 8);
    EXPECT_EQ(ids(a), ids(b));
    EXPECT_NE(ids(a), ids(c));
    EXPECT_EQ(per_class(a), per_class(c));
}

TEST(SamplePool, GenerationAndOverride)
{
    auto gen = zsp::testing::generation_task("summ");
    EXPECT_EQ(sample_training_pool(gen, generation_corpus(1000), {}, 1).size(), 256u);
    EXPECT_EQ(sample_training_pool(gen, generation_corpus(100), {}, 1).size(), 100u);

    auto ifly = classification_task("iflytek_public", {"a", "b", "c", "d", "e", "f", "g", "h"});
    auto ex = corpus({"a", "b", "c", "d", "e", "f", "g", "h"}, {200, 200, 200, 200, 200, 200, 200, 200});
    EXPECT_EQ(sample_training_pool(ifly, ex, {}, 1).size(), 512u);
}

TEST(SamplePool, PoolKeepsCorpusOrderAndHasNoDuplicates)
{
    auto task = classification_task("senti", {"neg", "pos"});
    auto ex = corpus({"neg", "pos"}, {300, 300});
    auto pool = sample_training_pool(task, ex, {}, 3);
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < ex.size(); ++i) {
        position[ex[i].id] = i;
    }
    for (std::size_t i = 1; i < pool.size(); ++i) {
        EXPECT_LT(position[pool[i - 1].id], position[pool[i].id]);
    }
}

TEST(SamplePool, PerClassCountsHoldForAllSeeds)
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        int nl = 2 + static_cast<int>(rng() % 5);
        std::vector<std::string> labels;
        std::vector<std::size_t> sizes;
        for (int i = 0; i < nl; ++i) {
            labels.push_back("L" + std::to_string(i));
            sizes.push_back(rng() % 200);
        }
        auto task = classification_task("t", labels);
        SamplingRule rule;
        rule.per_class_cap = 1 + rng() % 150;
        auto pool = sample_training_pool(task, corpus(labels, sizes), rule, rng());
        auto counts = per_class(pool);
        for (int i = 0; i < nl; ++i) {
            EXPECT_EQ(counts[labels[i]], std::min(rule.per_class_cap, sizes[i]));
        }
    }
}

TEST(SamplePool, InvalidRule)
{
    SamplingRule rule;
    rule.per_class_cap = 0;
    EXPECT_THROW(rule.validate(), ConfigError);
}

TEST(DevSet, FourLabelsGetThirtyTwo)
{
    auto task = classification_task("t", {"a", "b", "c", "d"});
    auto split = build_dev_set(task, corpus({"a", "b", "c", "d"}, {30, 30, 30, 30}), 1);
    EXPECT_EQ(split.dev.size(), 32u);
    EXPECT_TRUE(split.warnings.empty());
}

TEST(DevSet, SixLabelsGetEightEach)
{
    std::vector<std::string> labels{"a", "b", "c", "d", "e", "f"};
    auto task = classification_task("t", labels);
    auto split = build_dev_set(task, corpus(labels, {20, 20, 20, 20, 20, 20}), 1);
    EXPECT_EQ(split.dev.size(), 48u);
    for (const auto& [label, n] : per_class(split.dev)) {
        EXPECT_EQ(n, 8u) << label;
    }
}

TEST(DevSet, FiveLabelsAreStratified)
{
    std::vector<std::string> labels{"a", "b", "c", "d", "e"};
    auto task = classification_task("t", labels);
    EXPECT_EQ(build_dev_set(task, corpus(labels, {20, 20, 20, 20, 20}), 1).dev.size(), 40u);
}

TEST(DevSet, SmallGenerationTaskCappedWithWarning)
{
    auto task = zsp::testing::generation_task("summ");
    auto split = build_dev_set(task, generation_corpus(20), 1);
    EXPECT_EQ(split.dev.size(), 20u);
    EXPECT_EQ(split.warnings.size(), 1u);
    EXPECT_TRUE(split.remaining.empty());
}

TEST(DevSet, EmptyClassUnderStratificationFails)
{
    std::vector<std::string> labels{"a", "b", "c", "d", "e", "f"};
    auto task = classification_task("t", labels);
    EXPECT_THROW(build_dev_set(task, corpus(labels, {20, 20, 20, 20, 20, 0}), 1), DataError);
}

TEST(DevSet, DisjointFromTrainingPool)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::string> labels{"a", "b", "c", "d", "e", "f"};
        labels.resize(2 + rng() % 5);
        std::vector<std::size_t> sizes;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            sizes.push_back(8 + rng() % 200);
        }
        auto task = classification_task("t", labels);
        auto ex = corpus(labels, sizes);
        auto split = build_dev_set(task, ex, rng());
        auto pool = sample_training_pool(task, split.remaining, {}, rng());
        std::set<std::string> dev_ids;
        for (const auto& d : split.dev) {
            dev_ids.insert(d.id);
        }
        for (const auto& p : pool) {
            EXPECT_EQ(dev_ids.count(p.id), 0u);
        }
        EXPECT_EQ(split.dev.size() + split.remaining.size(), ex.size());
    }
}
