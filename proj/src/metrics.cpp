// SPDX-License-Identifier: Apache-2.0

#include "zsp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <unordered_map>
#include <vector>

namespace zsp::metrics {

namespace {

struct Overlap {
    std::size_t common = 0;
    std::size_t predicted = 0;
    std::size_t gold = 0;
};

Overlap token_overlap(std::string_view predicted, std::string_view gold, text::TokenUnit unit)
{
    unit = text::resolve_unit(unit, predicted, gold);
    auto pred_tokens = text::tokenize(predicted, unit);
    auto gold_tokens = text::tokenize(gold, unit);
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& t : gold_tokens) {
        ++counts[t];
    }
    Overlap o{0, pred_tokens.size(), gold_tokens.size()};
    for (const auto& t : pred_tokens) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++o.common;
        }
    }
    return o;
}

// Sums in sorted order so that the mean does not depend on record order.
double order_free_mean(std::vector<double> values)
{
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

const std::string& need_text(const std::optional<std::string>& s, const char* what)
{
    if (!s) {
        throw MetricError(std::string("record lacks ") + what);
    }
    return *s;
}

} // namespace

double auc(std::span<const double> scores, std::span<const bool> positive)
{
    if (scores.size() != positive.size()) {
        throw MetricError("auc: scores and labels differ in length");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    for (double s : scores) {
        if (!std::isfinite(s)) {
            throw MetricError("auc: non-finite ranking score");
        }
    }
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

    std::uint64_t total_pos = 0;
    std::uint64_t total_neg = 0;
    std::uint64_t concordant = 0;
    std::uint64_t tied = 0;
    std::uint64_t neg_below = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::uint64_t pos = 0;
        std::uint64_t neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (positive[order[j]] ? pos : neg) += 1;
            ++j;
        }
        concordant += pos * neg_below;
        tied += pos * neg;
        neg_below += neg;
        total_pos += pos;
        total_neg += neg;
        i = j;
    }
    if (total_pos == 0 || total_neg == 0) {
        throw MetricError("auc undefined: need at least one positive and one negative example");
    }
    return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) /
           (static_cast<double>(total_pos) * static_cast<double>(total_neg));
}

double auc(std::span<const PredictionRecord> records, std::string_view positive_label)
{
    std::vector<double> scores;
    // std::vector<bool> is not contiguous, so a span needs a plain array.
    auto flags = std::make_unique<bool[]>(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.ranking_score) {
            throw MetricError("auc: record lacks ranking_score");
        }
        scores.push_back(*r.ranking_score);
        flags[i] = need_text(r.gold_label, "gold_label") == positive_label;
    }
    return auc(scores, std::span<const bool>(flags.get(), records.size()));
}

double micro_f1(std::span<const PredictionRecord> records)
{
    if (records.empty()) {
        throw MetricError("micro_f1: empty input");
    }
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (const auto& r : records) {
        const auto& gold = need_text(r.gold_label, "gold_label");
        if (!r.predicted_label) {
            ++fn;
        } else if (*r.predicted_label == gold) {
            ++tp;
        } else {
            ++fp;
            ++fn;
        }
    }
    if (tp == 0) {
        return 0.0;
    }
    return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
}

double string_f1(std::string_view predicted, std::string_view gold, text::TokenUnit unit)
{
    auto o = token_overlap(predicted, gold, unit);
    if (o.predicted == 0 && o.gold == 0) {
        return 1.0;
    }
    if (o.common == 0) {
        return 0.0;
    }
    return static_cast<double>(2 * o.common) / static_cast<double>(o.predicted + o.gold);
}

double pos_f1(std::span<const PredictionRecord> records, text::TokenUnit unit)
{
    std::vector<double> values;
    for (const auto& r : records) {
        const auto& gold = need_text(r.gold_text, "gold_text");
        if (gold == kBlankMarker) {
            continue;
        }
        values.push_back(string_f1(need_text(r.predicted_text, "predicted_text"), gold, unit));
    }
    if (values.empty()) {
        throw MetricError("pos_f1 undefined: no record with a non-blank gold text");
    }
    return order_free_mean(std::move(values));
}

double mean_string_f1(std::span<const PredictionRecord> records, text::TokenUnit unit)
{
    if (records.empty()) {
        throw MetricError("string_f1: empty input");
    }
    std::vector<double> values;
    for (const auto& r : records) {
        values.push_back(string_f1(need_text(r.predicted_text, "predicted_text"),
                                   need_text(r.gold_text, "gold_text"), unit));
    }
    return order_free_mean(std::move(values));
}

RougeScore rouge1(std::string_view hypothesis, std::string_view reference, text::TokenUnit unit)
{
    auto o = token_overlap(hypothesis, reference, unit);
    if (o.gold == 0) {
        throw MetricError("rouge1: empty reference");
    }
    RougeScore s;
    if (o.common == 0) {
        return s;
    }
    s.precision = static_cast<double>(o.common) / static_cast<double>(o.predicted);
    s.recall = static_cast<double>(o.common) / static_cast<double>(o.gold);
    s.f = static_cast<double>(2 * o.common) / static_cast<double>(o.predicted + o.gold);
    return s;
}

double mean_rouge1(std::span<const PredictionRecord> records, text::TokenUnit unit)
{
    if (records.empty()) {
        throw MetricError("rouge1: empty input");
    }
    std::vector<double> values;
    for (const auto& r : records) {
        values.push_back(rouge1(need_text(r.predicted_text, "predicted_text"),
                                need_text(r.gold_text, "gold_text"), unit).f);
    }
    return order_free_mean(std::move(values));
}

double compute(MetricKind kind, std::span<const PredictionRecord> records, const MetricOptions& options)
{
    switch (kind) {
    case MetricKind::Auc: return auc(records, options.positive_label);
    case MetricKind::MicroF1: return micro_f1(records);
    case MetricKind::StringF1: return mean_string_f1(records, options.token_unit);
    case MetricKind::PosF1: return pos_f1(records, options.token_unit);
    case MetricKind::Rouge1: return mean_rouge1(records, options.token_unit);
    }
    throw MetricError("unknown metric");
}

} // namespace zsp::metrics
