// SPDX-License-Identifier: Apache-2.0

// Shared fixtures for the test binaries.

#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "zsp/jsonl.hpp"
#include "zsp/protocol.hpp"
#include "zsp/task_registry.hpp"

namespace zsp::testing {

inline std::filesystem::path data_dir()
{
    return ZSP_TEST_DATA;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("zsp-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content)
{
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
}

inline TaskSpec classification_task(std::string id, std::vector<std::string> labels,
                                    MetricKind metric = MetricKind::MicroF1, int arity = 1)
{
    TaskSpec t;
    t.task_id = std::move(id);
    t.task_type = TaskType::SENTI;
    t.split = Split::Test;
    t.format = TaskFormat::Classification;
    t.label_set = std::move(labels);
    t.metric = metric;
    t.arity = arity;
    return t;
}

inline TaskSpec generation_task(std::string id, MetricKind metric = MetricKind::Rouge1)
{
    TaskSpec t;
    t.task_id = std::move(id);
    t.task_type = metric == MetricKind::Rouge1 ? TaskType::SUMM : TaskType::MRC;
    t.split = Split::Test;
    t.format = metric == MetricKind::Rouge1 ? TaskFormat::FreeGeneration : TaskFormat::SpanGeneration;
    t.metric = metric;
    t.arity = 1;
    return t;
}

inline LabeledExample labeled(std::string id, std::string segment, std::string label)
{
    return {std::move(id), {std::move(segment)}, std::move(label), std::nullopt};
}

inline LabeledExample with_text(std::string id, std::string segment, std::string gold)
{
    return {std::move(id), {std::move(segment)}, std::nullopt, std::move(gold)};
}

/// Generate client answering through a callback, counting calls.
class FnGenerateClient : public protocol::GenerateClient {
public:
    explicit FnGenerateClient(std::function<std::string(const protocol::GenerateRequest&)> fn) : fn_(std::move(fn)) {}
    protocol::GenerateResponse generate(const protocol::GenerateRequest& r) override
    {
        std::lock_guard lock(mutex_);
        requests.push_back(r.prompt_text);
        return {fn_(r), {}};
    }
    std::vector<std::string> requests;

private:
    std::function<std::string(const protocol::GenerateRequest&)> fn_;
    std::mutex mutex_;
};

class FnTranslateClient : public protocol::TranslateClient {
public:
    explicit FnTranslateClient(std::function<std::string(const protocol::TranslateRequest&)> fn) : fn_(std::move(fn)) {}
    protocol::TranslateResponse translate(const protocol::TranslateRequest& r) override { return {fn_(r)}; }

private:
    std::function<std::string(const protocol::TranslateRequest&)> fn_;
};

/// Infill client that answers every "<extra_id_k>" with `fill`.
inline std::string fill_all(const std::string& prompt, const std::string& fill)
{
    std::string out;
    for (int k = 0;; ++k) {
        std::string tag = "<extra_id_" + std::to_string(k) + ">";
        if (prompt.find(tag) == std::string::npos) {
            break;
        }
        out += tag + fill;
    }
    return out;
}

} // namespace zsp::testing
