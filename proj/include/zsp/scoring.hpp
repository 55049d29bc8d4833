// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsp/metrics.hpp"
#include "zsp/prompt.hpp"
#include "zsp/protocol.hpp"
#include "zsp/task_registry.hpp"

namespace zsp {

struct ChoiceScore {
    std::string choice;
    double log_likelihood = 0.0;
    double length_normalized = 0.0;  // log_likelihood / token_count
};

ChoiceScore to_choice_score(const protocol::ChoiceLikelihood& c);

/// Highest length-normalized score wins; ties go to the earlier entry, so
/// pass choices in label_set order.
const std::string& predict_choice(std::span<const ChoiceScore> scores);

/// Softmax over the length-normalized scores, in input order.
std::vector<double> choice_probabilities(std::span<const ChoiceScore> scores);

struct ScoringClients {
    protocol::ScoreClient* score = nullptr;        // classification tasks
    protocol::GenerateClient* generate = nullptr;  // generation tasks
};

struct ScoringOptions {
    RenderOptions render;
    std::size_t max_in_flight = 1;
    int max_new_tokens = 64;
    std::optional<std::string> positive_label;  // AUC; defaults to label_set[1]
    text::TokenUnit token_unit = text::TokenUnit::Auto;
};

struct Evaluation {
    MetricKind metric = MetricKind::MicroF1;
    double value = 0.0;
    std::vector<PredictionRecord> records;  // one per dev example, dev order
};

/// Evaluates a template on a dev set through the task's backend role and
/// metric. Any backend failure fails the whole evaluation.
Evaluation evaluate_prompt(const PromptTemplate& tmpl, const TaskSpec& task,
                           std::span<const LabeledExample> dev, const ScoringClients& clients,
                           const ScoringOptions& options = {});

inline double score_prompt(const PromptTemplate& tmpl, const TaskSpec& task,
                           std::span<const LabeledExample> dev, const ScoringClients& clients,
                           const ScoringOptions& options = {})
{
    return evaluate_prompt(tmpl, task, dev, clients, options).value;
}

std::string positive_label_for(const TaskSpec& task, const std::optional<std::string>& configured);

} // namespace zsp
