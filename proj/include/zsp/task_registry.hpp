// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace zsp {

// 13 public task types plus the 6 production types.
enum class TaskType {
    SENTI, NEWS, INTENT, NLI, STS, PARA, QAM, MRC, NER, SUMM, KEYS, WSC, APP,
    Objection, Profile, Execution, Mention, Violation, Acception,
};

enum class Split { Train, Test };

enum class TaskFormat { Classification, SpanGeneration, FreeGeneration };

enum class MetricKind { Auc, MicroF1, StringF1, PosF1, Rouge1 };

TaskType parse_task_type(std::string_view s);
Split parse_split(std::string_view s);
TaskFormat parse_format(std::string_view s);
MetricKind parse_metric(std::string_view s);

std::string_view to_string(TaskType t);
std::string_view to_string(Split s);
std::string_view to_string(TaskFormat f);
std::string_view to_string(MetricKind m);

bool metric_fits_format(MetricKind metric, TaskFormat format);

/// Gold text marking an NER instance with no entity of the asked type.
inline constexpr std::string_view kBlankMarker = "blank";

/// Reserved mask marker; corpora may not contain it literally.
inline constexpr std::string_view kMaskMarker = "[MASK]";

struct TaskSpec {
    std::string task_id;
    TaskType task_type = TaskType::SENTI;
    Split split = Split::Train;
    TaskFormat format = TaskFormat::Classification;
    std::vector<std::string> label_set;
    MetricKind metric = MetricKind::MicroF1;
    int arity = 1;
    std::filesystem::path data_path;

    bool is_classification() const { return format == TaskFormat::Classification; }

    /// Throws DataError naming the task and the broken rule.
    void validate() const;

    bool operator==(const TaskSpec&) const = default;
};

struct LabeledExample {
    std::string id;
    std::vector<std::string> segments;
    std::optional<std::string> gold_label;
    std::optional<std::string> gold_text;

    /// False only for generation examples whose gold is the blank marker.
    bool is_positive() const { return !gold_text || *gold_text != kBlankMarker; }

    bool operator==(const LabeledExample&) const = default;
};

class Registry {
public:
    Registry() = default;
    explicit Registry(std::vector<TaskSpec> tasks);

    const std::vector<TaskSpec>& tasks() const { return tasks_; }
    std::size_t size() const { return tasks_.size(); }

    const TaskSpec* find(std::string_view task_id) const;
    /// Like find, but throws DataError for an unknown id.
    const TaskSpec& at(std::string_view task_id) const;

    std::vector<const TaskSpec*> by(TaskType type, Split split) const;
    std::vector<const TaskSpec*> by_split(Split split) const;
    std::size_t count_by(TaskType type, Split split) const { return by(type, split).size(); }

    bool operator==(const Registry& other) const { return tasks_ == other.tasks_; }

private:
    std::vector<TaskSpec> tasks_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<int, std::vector<std::size_t>> by_type_split_;
};

/// Loads a JSON Lines manifest, one TaskSpec per line. Relative data paths
/// resolve against the manifest's directory.
Registry load_registry(const std::filesystem::path& path);

/// Loads the task's corpus file. Record ids default to "<task_id>:<line>".
std::vector<LabeledExample> load_examples(const TaskSpec& task);

/// Validates one example against its task (arity, gold field, label set,
/// reserved mask marker). `where` prefixes the error message.
void validate_example(const TaskSpec& task, const LabeledExample& example, const std::string& where);

} // namespace zsp
