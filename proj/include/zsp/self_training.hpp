// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsp/jsonl.hpp"
#include "zsp/prompt.hpp"
#include "zsp/protocol.hpp"
#include "zsp/scoring.hpp"
#include "zsp/task_registry.hpp"

namespace zsp {

struct UnlabeledExample {
    std::string source_id;
    std::vector<std::string> segments;
    std::optional<std::vector<double>> embedding;

    std::string text() const;  // segments joined by newlines
};

/// JSON Lines with fields source_id, segments, and optional embedding.
std::vector<UnlabeledExample> load_unlabeled(const std::filesystem::path& path);

struct Retrieved {
    UnlabeledExample example;
    double similarity = 0.0;
};

double cosine(std::span<const double> a, std::span<const double> b);

/// The k pool items whose best cosine similarity to any query is highest,
/// descending, ties by source_id. Items without an embedding are embedded
/// through `embed` in one batch.
std::vector<Retrieved> retrieve_similar(std::span<const UnlabeledExample> pool,
                                        std::span<const std::vector<double>> queries, std::size_t k,
                                        protocol::EmbedClient* embed = nullptr);

struct Inference {
    std::string prediction;  // label for classification, text for generation
    double confidence = 0.0;
};

/// What self-training needs from a model: predictions with a confidence in
/// [0,1], and a hook signalling that it was retrained on the current set.
class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual Inference infer(const TaskSpec& task, const UnlabeledExample& example) = 0;
    virtual std::int64_t refresh() = 0;
};

/// Backend-driven model. Classification confidence is the softmax
/// probability of the top choice over length-normalized scores; generation
/// confidence is the mean per-token probability of the greedy completion.
class BackendModelClient : public ModelClient {
public:
    BackendModelClient(std::map<std::string, PromptTemplate> templates, ScoringClients clients,
                       protocol::RefreshClient* refresh, RenderOptions render = {}, int max_new_tokens = 64);

    Inference infer(const TaskSpec& task, const UnlabeledExample& example) override;
    std::int64_t refresh() override;

private:
    std::map<std::string, PromptTemplate> templates_;
    ScoringClients clients_;
    protocol::RefreshClient* refresh_;
    RenderOptions render_;
    int max_new_tokens_;
};

struct SelfTrainTask {
    TaskSpec task;
    std::vector<LabeledExample> train;
    std::vector<UnlabeledExample> pool;
};

struct SelfTrainConfig {
    double tau = 0.9;
    int epochs = 1;
    std::map<std::string, double> tau_overrides;
    std::size_t max_in_flight = 1;

    void validate() const;
    double tau_for(const std::string& task_id) const;
};

struct AugmentedRecord {
    LabeledExample example;
    bool pseudo = false;
    double confidence = 1.0;
    int epoch = -1;
    std::int64_t model_version = 0;
};

struct TaskRoundStats {
    std::string task_id;
    std::size_t inferred = 0;
    std::size_t added = 0;
    double mean_confidence = 0.0;  // over added examples; 0 when none
};

struct EpochStats {
    int epoch = 0;
    std::int64_t model_version = 0;
    std::vector<TaskRoundStats> tasks;
};

struct SelfTrainResult {
    std::map<std::string, std::vector<AugmentedRecord>> train;  // by task id
    std::map<std::string, std::vector<UnlabeledExample>> pool;  // unconsumed
    std::vector<EpochStats> rounds;                             // completed epochs
    std::optional<std::string> error;   // set when an epoch was aborted
    int error_exit_code = 0;
};

/// Iterative pseudo-labeling. Each epoch refreshes the model, infers every
/// remaining pool item of every task, and moves items with confidence >= tau
/// into the task's training set. A failure anywhere in an epoch discards
/// that epoch's additions; earlier epochs are kept and the error is returned
/// in the result.
SelfTrainResult self_train(ModelClient& model, std::span<const SelfTrainTask> tasks, const SelfTrainConfig& config);

/// Choices this implementation makes where the algorithm is silent.
OrderedJson self_train_metadata(const SelfTrainConfig& config);

OrderedJson to_json(const AugmentedRecord& r, const TaskSpec& task);
OrderedJson to_json(const EpochStats& s);

} // namespace zsp
