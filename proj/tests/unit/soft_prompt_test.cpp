// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "support.hpp"
#include "zsp/error.hpp"
#include "zsp/soft_prompt.hpp"

using namespace zsp;

namespace {

TaskEmbedding emb(std::string id, std::size_t rows, std::size_t cols, std::vector<double> v)
{
    return {std::move(id), rows, cols, std::move(v)};
}

SimilarityProfile profile(std::vector<std::pair<std::string, double>> ps)
{
    SimilarityProfile p;
    for (auto& [id, v] : ps) {
        p.probs.push_back({id, v});
    }
    return p;
}

std::vector<TaskEmbedding> random_store(std::mt19937_64& rng, std::size_t tasks, std::size_t rows, std::size_t cols)
{
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<TaskEmbedding> store;
    for (std::size_t t = 0; t < tasks; ++t) {
        TaskEmbedding e{"task" + std::to_string(t), rows, cols, std::vector<double>(rows * cols)};
        for (auto& v : e.values) {
            v = d(rng);
        }
        store.push_back(e);
    }
    return store;
}

SimilarityProfile random_profile(std::mt19937_64& rng, const std::vector<TaskEmbedding>& store)
{
    std::vector<double> w(store.size());
    double total = 0.0;
    for (auto& x : w) {
        x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        total += x;
    }
    SimilarityProfile p;
    for (std::size_t i = 0; i < store.size(); ++i) {
        p.probs.push_back({store[i].task_id, w[i] / total});
    }
    return p;
}

bool bit_equal(const TaskEmbedding& a, const TaskEmbedding& b)
{
    return a.values.size() == b.values.size() &&
           std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
}

} // namespace

TEST(ComposeWeighted, Fixtures)
{
    std::vector<TaskEmbedding> store{emb("a", 1, 2, {1, 2}), emb("b", 1, 2, {3, 4})};
    auto out = compose_weighted(store, profile({{"a", 0.3}, {"b", 0.7}}));
    // 0.3*1 + 0.7*3 and 0.3*2 + 0.7*4, evaluated in the same order.
    EXPECT_EQ(out.values[0], 0.3 * 1 + 0.7 * 3);
    EXPECT_EQ(out.values[1], 0.3 * 2 + 0.7 * 4);
    EXPECT_NEAR(out.values[0], 2.4, 1e-15);
    EXPECT_NEAR(out.values[1], 3.4, 1e-15);

    auto mean = compose_weighted(store, profile({{"a", 0.5}, {"b", 0.5}}));
    EXPECT_EQ(mean.values, (std::vector<double>{2, 3}));
    auto one_hot = compose_weighted(store, profile({{"b", 1.0}, {"a", 0.0}}));
    EXPECT_EQ(one_hot.values, store[1].values);
}

TEST(ComposeWeighted, Errors)
{
    std::vector<TaskEmbedding> store{emb("a", 1, 2, {1, 2}), emb("b", 1, 3, {3, 4, 5})};
    EXPECT_THROW(compose_weighted(store, profile({{"a", 0.5}, {"b", 0.5}})), DataError);
    std::vector<TaskEmbedding> ok{emb("a", 1, 2, {1, 2}), emb("b", 1, 2, {3, 4})};
    EXPECT_THROW(compose_weighted(ok, profile({{"a", 0.5}, {"b", 0.6}})), DataError);
    EXPECT_THROW(compose_weighted(ok, profile({{"a", 1.0}})), DataError);
    EXPECT_THROW(compose_weighted(ok, profile({{"a", 0.5}, {"c", 0.5}})), DataError);
    EXPECT_THROW(compose_weighted(ok, profile({{"a", -0.1}, {"b", 1.1}})), DataError);
    std::vector<TaskEmbedding> nan{emb("a", 1, 1, {std::nan("")})};
    EXPECT_THROW(compose_weighted(nan, profile({{"a", 1.0}})), DataError);
}

TEST(ComposeTop1, ArgmaxAndTies)
{
    std::vector<TaskEmbedding> store{emb("a", 1, 2, {1, 2}), emb("b", 1, 2, {3, 4})};
    EXPECT_EQ(compose_top1(store, profile({{"a", 0.9}, {"b", 0.1}})).values, store[0].values);
    EXPECT_EQ(compose_top1(store, profile({{"b", 0.5}, {"a", 0.5}})).values, store[0].values);
    EXPECT_EQ(compose_top1(store, profile({{"a", 0.2}, {"b", 0.8}})).values, store[1].values);
}

TEST(ComposeProperties, OneHotDegeneracyIsBitExact)
{
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        auto store = random_store(rng, 1 + rng() % 6, 1 + rng() % 8, 1 + rng() % 64);
        std::size_t k = rng() % store.size();
        SimilarityProfile p;
        for (std::size_t i = 0; i < store.size(); ++i) {
            p.probs.push_back({store[i].task_id, i == k ? 1.0 : 0.0});
        }
        auto w = compose_weighted(store, p);
        auto t = compose_top1(store, p);
        EXPECT_TRUE(bit_equal(w, t));
        EXPECT_TRUE(bit_equal(w, store[k]));
    }
}

TEST(ComposeProperties, ConvexHullAndLinearity)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 300; ++trial) {
        auto store = random_store(rng, 2 + rng() % 5, 1 + rng() % 4, 1 + rng() % 64);
        auto p = random_profile(rng, store);
        auto q = random_profile(rng, store);
        auto out = compose_weighted(store, p);
        for (std::size_t j = 0; j < out.values.size(); ++j) {
            double lo = store[0].values[j], hi = lo;
            for (const auto& e : store) {
                lo = std::min(lo, e.values[j]);
                hi = std::max(hi, e.values[j]);
            }
            EXPECT_GE(out.values[j], lo - 1e-9);
            EXPECT_LE(out.values[j], hi + 1e-9);
        }
        const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        SimilarityProfile blend;
        for (std::size_t i = 0; i < store.size(); ++i) {
            blend.probs.push_back({store[i].task_id, alpha * p.probs[i].prob + (1 - alpha) * q.probs[i].prob});
        }
        auto lhs = compose_weighted(store, blend);
        auto cp = compose_weighted(store, p);
        auto cq = compose_weighted(store, q);
        for (std::size_t j = 0; j < lhs.values.size(); ++j) {
            EXPECT_NEAR(lhs.values[j], alpha * cp.values[j] + (1 - alpha) * cq.values[j], 1e-9);
        }
    }
}

TEST(ComposeProperties, Top1InvariantUnderMonotoneTransform)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto store = random_store(rng, 2 + rng() % 6, 1, 4);
        auto p = random_profile(rng, store);
        SimilarityProfile t;
        double total = 0.0;
        for (const auto& e : p.probs) {
            total += std::exp(3.0 * e.prob);
        }
        for (const auto& e : p.probs) {
            t.probs.push_back({e.task_id, std::exp(3.0 * e.prob) / total});
        }
        EXPECT_EQ(compose_top1(store, p).values, compose_top1(store, t).values);
    }
}

TEST(RandomInit, DeterministicAndDistributed)
{
    auto a = random_init(4, 8, 11);
    auto b = random_init(4, 8, 11);
    auto c = random_init(4, 8, 12);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);

    const double sigma = 0.02;
    auto big = random_init(100, 100, 5, sigma);
    double mean = 0.0;
    for (double v : big.values) {
        mean += v;
    }
    mean /= big.values.size();
    double var = 0.0;
    for (double v : big.values) {
        var += (v - mean) * (v - mean);
    }
    double sd = std::sqrt(var / (big.values.size() - 1));
    EXPECT_LT(std::abs(mean), 3 * sigma / 100);
    EXPECT_LT(std::abs(sd - sigma), 0.1 * sigma);
    EXPECT_THROW(random_init(0, 4, 1), ConfigError);
}

TEST(PerSample, PolicySwitch)
{
    std::vector<TaskEmbedding> store{emb("a", 1, 2, {1, 2}), emb("b", 1, 2, {3, 4})};
    std::vector<SimilarityProfile> samples{profile({{"a", 1.0}, {"b", 0.0}}), profile({{"a", 0.0}, {"b", 1.0}})};
    auto avg_p = compose_per_sample(store, samples, SampleAggregation::AverageProfiles);
    auto avg_e = compose_per_sample(store, samples, SampleAggregation::AverageEmbeddings);
    EXPECT_EQ(avg_p.values, (std::vector<double>{2, 3}));
    EXPECT_EQ(avg_e.values, (std::vector<double>{2, 3}));
    EXPECT_EQ(parse_sample_aggregation("average_profiles"), SampleAggregation::AverageProfiles);
    EXPECT_THROW(parse_sample_aggregation("median"), ConfigError);
}

TEST(StoreFile, RoundTripsThroughFloat32)
{
    zsp::testing::TempDir dir;
    std::vector<TaskEmbedding> store{emb("a", 2, 2, {0.5, -1.25, 3.0, 1e-3}), emb("b", 2, 2, {1, 2, 3, 4})};
    write_embedding_store(dir / "store.bin", store);
    auto back = read_embedding_store(dir / "store.bin");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].task_id, "a");
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(back[0].values[i], static_cast<double>(static_cast<float>(store[0].values[i])));
    }
    EXPECT_EQ(back[1].values, store[1].values);

    // Header is text; values are little-endian.
    auto raw = read_text(dir / "store.bin");
    EXPECT_EQ(raw.rfind("ZSPEMB 2\na 2 2\n", 0), 0u);
    const std::size_t at = std::string("ZSPEMB 2\na 2 2\n").size();
    EXPECT_EQ(static_cast<unsigned char>(raw[at + 3]), 0x3Fu);  // 0.5f = 0x3F000000

    write_profile(dir / "p.jsonl", profile({{"a", 0.25}, {"b", 0.75}}));
    auto p = read_profile(dir / "p.jsonl");
    ASSERT_EQ(p.probs.size(), 2u);
    EXPECT_EQ(p.probs[1].prob, 0.75);
}
