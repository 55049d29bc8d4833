// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "zsp/error.hpp"
#include "zsp/task_registry.hpp"
#include "zsp/text.hpp"

using namespace zsp;
using zsp::testing::TempDir;
using zsp::testing::write_file;

TEST(Text, TokenizeSwitchesOnCjk)
{
    EXPECT_EQ(text::tokenize("ab  cd", text::TokenUnit::Auto), (std::vector<std::string>{"ab", "cd"}));
    EXPECT_EQ(text::tokenize("北京 好", text::TokenUnit::Auto), (std::vector<std::string>{"北", "京", "好"}));
    EXPECT_EQ(text::tokenize("abc", text::TokenUnit::Char), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(text::length("选项：是"), 4u);
}

TEST(Text, ResolveUnitLooksAtBothSides)
{
    EXPECT_EQ(text::resolve_unit(text::TokenUnit::Auto, "abc", "中"), text::TokenUnit::Char);
    EXPECT_EQ(text::resolve_unit(text::TokenUnit::Auto, "abc", "def"), text::TokenUnit::Word);
    EXPECT_EQ(text::resolve_unit(text::TokenUnit::Word, "中", "中"), text::TokenUnit::Word);
}

TEST(Registry, SingleTaskManifest)
{
    TempDir dir;
    write_file(dir / "tasks.jsonl",
               R"({"task_id":"s1","task_type":"SENTI","split":"train","format":"classification","label_set":["neg","pos"],"metric":"micro_f1","data_path":"s1.jsonl"})"
               "\n");
    auto reg = load_registry(dir / "tasks.jsonl");
    ASSERT_EQ(reg.size(), 1u);
    ASSERT_NE(reg.find("s1"), nullptr);
    EXPECT_EQ(reg.at("s1").data_path, dir / "s1.jsonl");
    EXPECT_EQ(reg.find("missing"), nullptr);
    EXPECT_THROW(reg.at("missing"), DataError);
}

TEST(Registry, RejectsMetricFormatMismatch)
{
    TempDir dir;
    write_file(dir / "tasks.jsonl",
               R"({"task_id":"sum","task_type":"SUMM","split":"test","format":"free_generation","metric":"auc","data_path":"x.jsonl"})"
               "\n");
    try {
        load_registry(dir / "tasks.jsonl");
        FAIL() << "expected rejection";
    } catch (const DataError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("auc"), std::string::npos) << msg;
        EXPECT_NE(msg.find("free_generation"), std::string::npos) << msg;
        EXPECT_NE(msg.find("tasks.jsonl:1"), std::string::npos) << msg;
    }
}

TEST(Registry, SentimentTrainTestCounts)
{
    auto reg = load_registry(zsp::testing::data_dir() / "senti_table1.jsonl");
    EXPECT_EQ(reg.count_by(TaskType::SENTI, Split::Train), 4u);
    EXPECT_EQ(reg.count_by(TaskType::SENTI, Split::Test), 13u);
}

TEST(Registry, LoadIsIdempotent)
{
    auto a = load_registry(zsp::testing::data_dir() / "senti_table1.jsonl");
    auto b = load_registry(zsp::testing::data_dir() / "senti_table1.jsonl");
    EXPECT_TRUE(a == b);
}

TEST(Registry, RejectsDuplicateIdsAndUnknownTypes)
{
    TempDir dir;
    const std::string rec =
        R"({"task_id":"s1","task_type":"SENTI","split":"train","format":"classification","label_set":["a","b"],"metric":"auc","data_path":"x"})";
    write_file(dir / "dup.jsonl", rec + "\n" + rec + "\n");
    EXPECT_THROW(load_registry(dir / "dup.jsonl"), DataError);
    write_file(dir / "type.jsonl",
               R"({"task_id":"s1","task_type":"POETRY","split":"train","format":"classification","label_set":["a","b"],"metric":"auc","data_path":"x"})"
               "\n");
    EXPECT_THROW(load_registry(dir / "type.jsonl"), DataError);
}

TEST(Registry, QueriesMatchBruteForceScan)
{
    std::mt19937_64 rng(11);
    const TaskType types[] = {TaskType::SENTI, TaskType::NEWS, TaskType::NER, TaskType::SUMM};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<TaskSpec> specs;
        int n = static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) {
            TaskSpec t;
            t.task_id = "t" + std::to_string(i);
            t.task_type = types[rng() % 4];
            t.split = rng() % 2 ? Split::Train : Split::Test;
            if (t.task_type == TaskType::NER) {
                t.format = TaskFormat::SpanGeneration;
                t.metric = MetricKind::PosF1;
            } else if (t.task_type == TaskType::SUMM) {
                t.format = TaskFormat::FreeGeneration;
                t.metric = MetricKind::Rouge1;
            } else {
                t.format = TaskFormat::Classification;
                t.metric = MetricKind::MicroF1;
                t.label_set = {"a", "b"};
            }
            t.data_path = "x";
            specs.push_back(t);
        }
        Registry reg(specs);
        for (auto type : types) {
            for (auto split : {Split::Train, Split::Test}) {
                std::vector<std::string> want;
                for (const auto& s : specs) {
                    if (s.task_type == type && s.split == split) {
                        want.push_back(s.task_id);
                    }
                }
                std::vector<std::string> got;
                for (const auto* s : reg.by(type, split)) {
                    got.push_back(s->task_id);
                }
                EXPECT_EQ(got, want);
            }
        }
    }
}

TEST(Examples, LoadsClassificationCorpus)
{
    auto reg = load_registry(zsp::testing::data_dir() / "senti_table1.jsonl");
    auto ex = load_examples(reg.at("senti_train_0"));
    ASSERT_EQ(ex.size(), 4u);
    EXPECT_EQ(ex[0].segments[0], "这辆车开起来很舒服");
    EXPECT_EQ(*ex[0].gold_label, "积极");
}

TEST(Examples, UnknownLabelNamesRecordAndLabel)
{
    auto task = zsp::testing::classification_task("yn", {"yes", "no"});
    task.data_path = zsp::testing::data_dir() / "yesno_bad.jsonl";
    try {
        load_examples(task);
        FAIL();
    } catch (const DataError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("maybe"), std::string::npos) << msg;
        EXPECT_NE(msg.find(":2"), std::string::npos) << msg;
    }
}

TEST(Examples, BlankNerGoldIsNotPositive)
{
    auto task = zsp::testing::generation_task("ner", MetricKind::PosF1);
    task.task_type = TaskType::NER;
    task.data_path = zsp::testing::data_dir() / "ner.jsonl";
    auto ex = load_examples(task);
    ASSERT_EQ(ex.size(), 2u);
    EXPECT_TRUE(ex[0].is_positive());
    EXPECT_FALSE(ex[1].is_positive());
    EXPECT_EQ(*ex[1].gold_text, "blank");
}

TEST(Examples, RejectsMaskMarkerAndArityMismatch)
{
    auto task = zsp::testing::classification_task("c", {"a", "b"});
    EXPECT_THROW(validate_example(task, {"x", {"has [MASK] inside"}, "a", std::nullopt}, "r"), DataError);
    EXPECT_THROW(validate_example(task, {"x", {"one", "two"}, "a", std::nullopt}, "r"), DataError);
    EXPECT_THROW(validate_example(task, {"x", {"one"}, "a", "also text"}, "r"), DataError);
    EXPECT_NO_THROW(validate_example(task, {"x", {"one"}, "a", std::nullopt}, "r"));
}
