// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "zsp/error.hpp"
#include "zsp/task_registry.hpp"
#include "zsp/text.hpp"

namespace zsp {

/// Raised when a metric is undefined for its input (single-class AUC,
/// no positive records for Pos-F1, empty reference for ROUGE).
class MetricError : public DataError {
public:
    using DataError::DataError;
};

struct PredictionRecord {
    std::optional<double> ranking_score;
    std::optional<std::string> predicted_label;
    std::optional<std::string> predicted_text;
    std::optional<std::string> gold_label;
    std::optional<std::string> gold_text;
};

namespace metrics {

/// Area under the ROC curve; tied positive/negative pairs earn half credit.
double auc(std::span<const double> scores, std::span<const bool> positive);
double auc(std::span<const PredictionRecord> records, std::string_view positive_label);

/// TP/FP/FN pooled over all labels. A record without a prediction counts as
/// a miss only.
double micro_f1(std::span<const PredictionRecord> records);

/// Token-multiset F1. Empty vs empty is 1, one side empty is 0.
double string_f1(std::string_view predicted, std::string_view gold,
                 text::TokenUnit unit = text::TokenUnit::Auto);

/// Mean string F1 over records whose gold text is not the blank marker.
double pos_f1(std::span<const PredictionRecord> records, text::TokenUnit unit = text::TokenUnit::Auto);

/// Mean string F1 over all records.
double mean_string_f1(std::span<const PredictionRecord> records, text::TokenUnit unit = text::TokenUnit::Auto);

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

/// Clipped unigram overlap. Throws MetricError on an empty reference.
RougeScore rouge1(std::string_view hypothesis, std::string_view reference,
                  text::TokenUnit unit = text::TokenUnit::Auto);

/// Mean ROUGE-1 F over records.
double mean_rouge1(std::span<const PredictionRecord> records, text::TokenUnit unit = text::TokenUnit::Auto);

struct MetricOptions {
    std::string positive_label;  // used by auc
    text::TokenUnit token_unit = text::TokenUnit::Auto;
};

double compute(MetricKind kind, std::span<const PredictionRecord> records, const MetricOptions& options);

} // namespace metrics
} // namespace zsp
