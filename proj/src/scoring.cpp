// SPDX-License-Identifier: Apache-2.0

#include "zsp/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "zsp/parallel.hpp"

namespace zsp {

ChoiceScore to_choice_score(const protocol::ChoiceLikelihood& c)
{
    if (c.token_count <= 0) {
        throw protocol::ProtocolError("choice '" + c.choice + "' has non-positive token_count");
    }
    if (!std::isfinite(c.log_likelihood)) {
        throw protocol::ProtocolError("choice '" + c.choice + "' has a non-finite log-likelihood");
    }
    return {c.choice, c.log_likelihood, c.log_likelihood / c.token_count};
}

const std::string& predict_choice(std::span<const ChoiceScore> scores)
{
    if (scores.empty()) {
        throw DataError("predict_choice: no choices");
    }
    const ChoiceScore* best = &scores[0];
    for (const auto& s : scores.subspan(1)) {
        if (s.length_normalized > best->length_normalized) {
            best = &s;
        }
    }
    return best->choice;
}

std::vector<double> choice_probabilities(std::span<const ChoiceScore> scores)
{
    std::vector<double> p;
    if (scores.empty()) {
        return p;
    }
    double peak = scores[0].length_normalized;
    for (const auto& s : scores) {
        peak = std::max(peak, s.length_normalized);
    }
    double total = 0.0;
    for (const auto& s : scores) {
        p.push_back(std::exp(s.length_normalized - peak));
        total += p.back();
    }
    for (auto& v : p) {
        v /= total;
    }
    return p;
}

std::string positive_label_for(const TaskSpec& task, const std::optional<std::string>& configured)
{
    if (configured) {
        if (std::find(task.label_set.begin(), task.label_set.end(), *configured) == task.label_set.end()) {
            throw ConfigError("positive label '" + *configured + "' is not in the label set of '" + task.task_id + "'");
        }
        return *configured;
    }
    if (task.label_set.size() < 2) {
        throw ConfigError("task '" + task.task_id + "' has no label to treat as positive");
    }
    return task.label_set[1];
}

Evaluation evaluate_prompt(const PromptTemplate& tmpl, const TaskSpec& task, std::span<const LabeledExample> dev,
                           const ScoringClients& clients, const ScoringOptions& options)
{
    if (dev.empty()) {
        throw DataError("empty dev set for task '" + task.task_id + "'");
    }
    if (!metric_fits_format(task.metric, task.format)) {
        throw DataError("metric/format mismatch for task '" + task.task_id + "'");
    }
    if (tmpl.arity != task.arity) {
        throw DataError("template arity " + std::to_string(tmpl.arity) + " does not match task '" + task.task_id +
                        "' arity " + std::to_string(task.arity));
    }
    const bool classify = task.is_classification();
    if (classify && clients.score == nullptr) {
        throw ConfigError("classification task '" + task.task_id + "' needs a score endpoint");
    }
    if (!classify && clients.generate == nullptr) {
        throw ConfigError("generation task '" + task.task_id + "' needs a generate endpoint");
    }

    Evaluation ev;
    ev.metric = task.metric;
    metrics::MetricOptions mopts;
    mopts.token_unit = options.token_unit;
    std::size_t positive_index = 0;
    if (task.metric == MetricKind::Auc) {
        mopts.positive_label = positive_label_for(task, options.positive_label);
        positive_index = static_cast<std::size_t>(
            std::find(task.label_set.begin(), task.label_set.end(), mopts.positive_label) - task.label_set.begin());
    }

    ev.records.resize(dev.size());
    parallel_for(dev.size(), options.max_in_flight, [&](std::size_t i) {
        const auto& ex = dev[i];
        auto rendered = render(tmpl, ex, options.render);
        PredictionRecord rec;
        rec.gold_label = ex.gold_label;
        rec.gold_text = ex.gold_text;
        if (classify) {
            protocol::ScoreRequest req{rendered.text, rendered.mask_offset, task.label_set, tmpl.soft_slot_len};
            auto matched = protocol::match_choices(req, clients.score->score(req));
            std::vector<ChoiceScore> scores;
            for (const auto& c : matched) {
                scores.push_back(to_choice_score(c));
            }
            rec.predicted_label = predict_choice(scores);
            if (task.metric == MetricKind::Auc) {
                rec.ranking_score = choice_probabilities(scores)[positive_index];
            }
        } else {
            protocol::GenerateRequest req{rendered.text, options.max_new_tokens, 0.0};
            rec.predicted_text = std::string(text::trim(clients.generate->generate(req).completion_text));
        }
        ev.records[i] = std::move(rec);
    });
    ev.value = metrics::compute(task.metric, ev.records, mopts);
    return ev;
}

} // namespace zsp
