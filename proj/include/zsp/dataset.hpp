// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "zsp/task_registry.hpp"

namespace zsp {

/// Training-pool caps. Classification tasks keep up to per_class_cap
/// examples of every label; generation tasks keep up to per_task_cap
/// examples. An override replaces either rule with a cap on the whole task.
struct SamplingRule {
    std::size_t per_class_cap = 128;
    std::size_t per_task_cap = 256;
    std::map<std::string, std::size_t> overrides{{"iflytek_public", 512}};

    void validate() const;
};

/// Uniform sample without replacement, returned in corpus order.
std::vector<LabeledExample> sample_training_pool(const TaskSpec& task, std::span<const LabeledExample> examples,
                                                 const SamplingRule& rule, std::uint64_t seed);

/// Dev-set sizes: tasks with fewer than `stratify_min_labels` labels, and
/// generation tasks, get `uniform_size` examples; others get `per_label`
/// examples of every label.
struct DevSetRule {
    std::size_t uniform_size = 32;
    std::size_t per_label = 8;
    std::size_t stratify_min_labels = 5;
};

struct DevSplit {
    std::vector<LabeledExample> dev;
    std::vector<LabeledExample> remaining;  // everything else, corpus order
    std::vector<std::string> warnings;
};

/// Carves a validation set out of a task's examples. `remaining` is what
/// training pools may draw from, so dev and training never overlap.
DevSplit build_dev_set(const TaskSpec& task, std::span<const LabeledExample> examples, std::uint64_t seed,
                       const DevSetRule& rule = {});

} // namespace zsp
