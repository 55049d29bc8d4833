// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zsp/dataset.hpp"
#include "zsp/gps.hpp"
#include "zsp/jsonl.hpp"
#include "zsp/mock_backend.hpp"
#include "zsp/mutation.hpp"
#include "zsp/prompt.hpp"
#include "zsp/protocol.hpp"
#include "zsp/self_training.hpp"
#include "zsp/text.hpp"

namespace zsp {

enum class ScorerKind { DevMetric, Length };
ScorerKind parse_scorer_kind(std::string_view s);

struct GpsSettings {
    GpsConfig search;
    MutatorKind mutator = MutatorKind::MaskInfill;
    ScorerKind scorer = ScorerKind::DevMetric;
    int runs = 1;                               // independent seeds per task
    std::vector<std::string> initial_templates; // ids; empty = all of the task's
};

struct ContaminationSettings {
    std::size_t n = 30;
    text::TokenUnit unit = text::TokenUnit::Auto;
};

struct SelfTrainSettings {
    SelfTrainConfig config;
    std::map<std::string, std::filesystem::path> unlabeled;  // task id -> pool file
    std::map<std::string, std::string> templates;            // task id -> template id
};

/// One reproducible run. Paths are resolved against the config file's
/// directory. The seed is mandatory.
struct RunConfig {
    std::filesystem::path registry;
    std::filesystem::path templates;
    std::filesystem::path output_dir = "runs";
    std::uint64_t seed = 0;
    std::map<protocol::Role, protocol::BackendEndpoint> endpoints;
    GpsSettings gps;
    MutationOptions mutation;
    SamplingRule sampling;
    DevSetRule dev_set;
    ContaminationSettings contamination;
    int max_new_tokens = 64;
    std::map<std::string, std::string> positive_labels;  // AUC tasks
    SelfTrainSettings self_training;
    protocol::MockScript mock;
    RenderOptions render;

    OrderedJson source;  // the parsed file, echoed into reports

    /// Throws ConfigError unless `role` has an endpoint.
    const protocol::BackendEndpoint& endpoint(protocol::Role role) const;
    /// Canonical echo with the effective seed; stable across runs.
    OrderedJson echo() const;
    /// 16 hex digits derived from echo().
    std::string hash() const;
};

RunConfig parse_run_config(const OrderedJson& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

} // namespace zsp
