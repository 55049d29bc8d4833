// SPDX-License-Identifier: Apache-2.0

#include "zsp/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "zsp/error.hpp"
#include "zsp/random.hpp"

namespace zsp {

namespace {

// Indices sampled without replacement, ascending.
std::vector<std::size_t> sample_indices(const std::vector<std::size_t>& population, std::size_t k, Rng& rng)
{
    std::vector<std::size_t> out;
    std::sample(population.begin(), population.end(), std::back_inserter(out), k, rng);
    return out;
}

std::vector<std::vector<std::size_t>> group_by_label(const TaskSpec& task, std::span<const LabeledExample> examples)
{
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < task.label_set.size(); ++i) {
        slot.emplace(task.label_set[i], i);
    }
    std::vector<std::vector<std::size_t>> groups(task.label_set.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& label = examples[i].gold_label;
        auto it = label ? slot.find(*label) : slot.end();
        if (it == slot.end()) {
            throw DataError("example '" + examples[i].id + "' has no label from the label set of '" + task.task_id + "'");
        }
        groups[it->second].push_back(i);
    }
    return groups;
}

std::vector<std::size_t> all_indices(std::size_t n)
{
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

Rng task_rng(std::uint64_t seed, const TaskSpec& task, std::uint64_t purpose)
{
    return make_rng(seed, {stable_hash(task.task_id), purpose});
}

} // namespace

void SamplingRule::validate() const
{
    if (per_class_cap < 1 || per_task_cap < 1) {
        throw ConfigError("sampling caps must be >= 1");
    }
    for (const auto& [id, cap] : overrides) {
        if (cap < 1) {
            throw ConfigError("sampling override for '" + id + "' must be >= 1");
        }
    }
}

std::vector<LabeledExample> sample_training_pool(const TaskSpec& task, std::span<const LabeledExample> examples,
                                                 const SamplingRule& rule, std::uint64_t seed)
{
    rule.validate();
    Rng rng = task_rng(seed, task, 1);
    std::vector<std::size_t> picked;
    if (auto it = rule.overrides.find(task.task_id); it != rule.overrides.end()) {
        picked = sample_indices(all_indices(examples.size()), it->second, rng);
    } else if (task.is_classification()) {
        for (const auto& group : group_by_label(task, examples)) {
            auto part = sample_indices(group, rule.per_class_cap, rng);
            picked.insert(picked.end(), part.begin(), part.end());
        }
        std::sort(picked.begin(), picked.end());
    } else {
        picked = sample_indices(all_indices(examples.size()), rule.per_task_cap, rng);
    }
    std::vector<LabeledExample> out;
    out.reserve(picked.size());
    for (auto i : picked) {
        out.push_back(examples[i]);
    }
    return out;
}

DevSplit build_dev_set(const TaskSpec& task, std::span<const LabeledExample> examples, std::uint64_t seed,
                       const DevSetRule& rule)
{
    Rng rng = task_rng(seed, task, 2);
    DevSplit split;
    std::vector<std::size_t> picked;
    const bool stratify = task.is_classification() && task.label_set.size() >= rule.stratify_min_labels;
    if (stratify) {
        auto groups = group_by_label(task, examples);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].empty()) {
                throw DataError("task '" + task.task_id + "': label '" + task.label_set[g] +
                                "' has no examples for the stratified dev set");
            }
            if (groups[g].size() < rule.per_label) {
                split.warnings.push_back("task '" + task.task_id + "': label '" + task.label_set[g] + "' has only " +
                                         std::to_string(groups[g].size()) + " example(s), wanted " +
                                         std::to_string(rule.per_label));
            }
            auto part = sample_indices(groups[g], rule.per_label, rng);
            picked.insert(picked.end(), part.begin(), part.end());
        }
        std::sort(picked.begin(), picked.end());
    } else {
        if (examples.size() < rule.uniform_size) {
            split.warnings.push_back("task '" + task.task_id + "': only " + std::to_string(examples.size()) +
                                     " example(s) available, wanted " + std::to_string(rule.uniform_size));
        }
        picked = sample_indices(all_indices(examples.size()), rule.uniform_size, rng);
    }
    std::vector<char> in_dev(examples.size(), 0);
    for (auto i : picked) {
        in_dev[i] = 1;
        split.dev.push_back(examples[i]);
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (!in_dev[i]) {
            split.remaining.push_back(examples[i]);
        }
    }
    return split;
}

} // namespace zsp
