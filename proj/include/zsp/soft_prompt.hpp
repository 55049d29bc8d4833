// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace zsp {

/// Row-major soft_slot_len x dim matrix for one task.
struct TaskEmbedding {
    std::string task_id;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    void validate() const;
    bool operator==(const TaskEmbedding&) const = default;
};

struct SimilarityEntry {
    std::string task_id;
    double prob = 0.0;
};

/// Classifier output over the training tasks, in any order.
struct SimilarityProfile {
    std::vector<SimilarityEntry> probs;

    void validate() const;
};

/// Probabilities aligned with store order. Throws DataError unless the
/// profile covers exactly the store's task ids and the values form a
/// distribution.
std::vector<double> aligned_probs(std::span<const TaskEmbedding> store, const SimilarityProfile& profile);

/// Sum_i prob_i * E_i.
TaskEmbedding compose_weighted(std::span<const TaskEmbedding> store, const SimilarityProfile& profile,
                               const std::string& new_task_id = "composed");

/// Copy of the embedding with the highest probability; ties go to the
/// earlier store entry.
TaskEmbedding compose_top1(std::span<const TaskEmbedding> store, const SimilarityProfile& profile,
                           const std::string& new_task_id = "composed");

TaskEmbedding random_init(std::size_t rows, std::size_t cols, std::uint64_t seed, double sigma = 0.02,
                          const std::string& new_task_id = "random");

enum class SampleAggregation { AverageProfiles, AverageEmbeddings };
SampleAggregation parse_sample_aggregation(std::string_view name);

/// Weighted composition from one profile per target-task sample.
/// AverageProfiles averages the distributions and composes once;
/// AverageEmbeddings composes per sample and averages the results.
TaskEmbedding compose_per_sample(std::span<const TaskEmbedding> store, std::span<const SimilarityProfile> samples,
                                 SampleAggregation policy = SampleAggregation::AverageProfiles,
                                 const std::string& new_task_id = "composed");

/// Store file: per task a text line "<task_id> <rows> <cols>\n" followed by
/// rows*cols little-endian IEEE-754 float32 values. Values are rounded to
/// float32 on write.
void write_embedding_store(const std::filesystem::path& path, std::span<const TaskEmbedding> store);
std::vector<TaskEmbedding> read_embedding_store(const std::filesystem::path& path);

/// Profile file: JSON Lines of {"task_id": ..., "prob": ...}.
SimilarityProfile read_profile(const std::filesystem::path& path);
void write_profile(const std::filesystem::path& path, const SimilarityProfile& profile);

} // namespace zsp
