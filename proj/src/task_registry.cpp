// SPDX-License-Identifier: Apache-2.0

#include "zsp/task_registry.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>
#include <utility>

#include "zsp/error.hpp"
#include "zsp/jsonl.hpp"

namespace zsp {

namespace {

constexpr std::array<std::pair<TaskType, std::string_view>, 19> kTaskTypes{{
    {TaskType::SENTI, "SENTI"}, {TaskType::NEWS, "NEWS"}, {TaskType::INTENT, "INTENT"},
    {TaskType::NLI, "NLI"}, {TaskType::STS, "STS"}, {TaskType::PARA, "PARA"},
    {TaskType::QAM, "QAM"}, {TaskType::MRC, "MRC"}, {TaskType::NER, "NER"},
    {TaskType::SUMM, "SUMM"}, {TaskType::KEYS, "KEYS"}, {TaskType::WSC, "WSC"},
    {TaskType::APP, "APP"}, {TaskType::Objection, "Objection"}, {TaskType::Profile, "Profile"},
    {TaskType::Execution, "Execution"}, {TaskType::Mention, "Mention"},
    {TaskType::Violation, "Violation"}, {TaskType::Acception, "Acception"},
}};

constexpr std::array<std::pair<MetricKind, std::string_view>, 5> kMetrics{{
    {MetricKind::Auc, "auc"}, {MetricKind::MicroF1, "micro_f1"}, {MetricKind::StringF1, "string_f1"},
    {MetricKind::PosF1, "pos_f1"}, {MetricKind::Rouge1, "rouge1"},
}};

constexpr std::array<std::pair<TaskFormat, std::string_view>, 3> kFormats{{
    {TaskFormat::Classification, "classification"},
    {TaskFormat::SpanGeneration, "span_generation"},
    {TaskFormat::FreeGeneration, "free_generation"},
}};

template <typename Enum, std::size_t N>
Enum lookup(const std::array<std::pair<Enum, std::string_view>, N>& table, std::string_view s, const char* what)
{
    for (const auto& [value, name] : table) {
        if (name == s) {
            return value;
        }
    }
    throw DataError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum e)
{
    for (const auto& [value, name] : table) {
        if (value == e) {
            return name;
        }
    }
    return "?";
}

int type_split_key(TaskType t, Split s)
{
    return static_cast<int>(t) * 2 + static_cast<int>(s);
}

std::string require_string(const Json& j, const char* field, const std::string& where)
{
    auto it = j.find(field);
    if (it == j.end() || !it->is_string()) {
        throw DataError(where + ": missing or non-string field '" + field + "'");
    }
    return it->get<std::string>();
}

} // namespace

TaskType parse_task_type(std::string_view s) { return lookup(kTaskTypes, s, "task_type"); }
TaskFormat parse_format(std::string_view s) { return lookup(kFormats, s, "format"); }
MetricKind parse_metric(std::string_view s) { return lookup(kMetrics, s, "metric"); }

Split parse_split(std::string_view s)
{
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw DataError("unknown split '" + std::string(s) + "' (expected train|test)");
}

std::string_view to_string(TaskType t) { return name_of(kTaskTypes, t); }
std::string_view to_string(TaskFormat f) { return name_of(kFormats, f); }
std::string_view to_string(MetricKind m) { return name_of(kMetrics, m); }
std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }

bool metric_fits_format(MetricKind metric, TaskFormat format)
{
    switch (metric) {
    case MetricKind::Auc:
    case MetricKind::MicroF1:
        return format == TaskFormat::Classification;
    case MetricKind::Rouge1:
        return format == TaskFormat::FreeGeneration;
    case MetricKind::StringF1:
    case MetricKind::PosF1:
        return format == TaskFormat::SpanGeneration;
    }
    return false;
}

void TaskSpec::validate() const
{
    auto fail = [&](const std::string& rule) {
        throw DataError("task '" + task_id + "': " + rule);
    };
    if (task_id.empty()) {
        throw DataError("task with empty task_id");
    }
    if (arity != 1 && arity != 2) {
        fail("arity must be 1 or 2, got " + std::to_string(arity));
    }
    if (is_classification()) {
        if (label_set.size() < 2) {
            fail("classification task needs at least 2 labels");
        }
    } else if (!label_set.empty()) {
        fail("generation task must have an empty label_set");
    }
    std::unordered_set<std::string> seen;
    for (const auto& l : label_set) {
        if (l.empty()) {
            fail("empty label in label_set");
        }
        if (!seen.insert(l).second) {
            fail("duplicate label '" + l + "' in label_set");
        }
    }
    if (!metric_fits_format(metric, format)) {
        fail("metric/format mismatch: metric " + std::string(to_string(metric)) +
             " is not valid for format " + std::string(to_string(format)));
    }
}

Registry::Registry(std::vector<TaskSpec> tasks) : tasks_(std::move(tasks))
{
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        const auto& t = tasks_[i];
        t.validate();
        if (!by_id_.emplace(t.task_id, i).second) {
            throw DataError("task '" + t.task_id + "': duplicate task_id");
        }
        by_type_split_[type_split_key(t.task_type, t.split)].push_back(i);
    }
}

const TaskSpec* Registry::find(std::string_view task_id) const
{
    auto it = by_id_.find(std::string(task_id));
    return it == by_id_.end() ? nullptr : &tasks_[it->second];
}

const TaskSpec& Registry::at(std::string_view task_id) const
{
    if (const auto* t = find(task_id)) {
        return *t;
    }
    throw DataError("unknown task_id '" + std::string(task_id) + "'");
}

std::vector<const TaskSpec*> Registry::by(TaskType type, Split split) const
{
    std::vector<const TaskSpec*> out;
    if (auto it = by_type_split_.find(type_split_key(type, split)); it != by_type_split_.end()) {
        for (auto i : it->second) {
            out.push_back(&tasks_[i]);
        }
    }
    return out;
}

std::vector<const TaskSpec*> Registry::by_split(Split split) const
{
    std::vector<const TaskSpec*> out;
    for (const auto& t : tasks_) {
        if (t.split == split) {
            out.push_back(&t);
        }
    }
    return out;
}

Registry load_registry(const std::filesystem::path& path)
{
    std::vector<TaskSpec> tasks;
    const auto base = path.parent_path();
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        const std::string where = path.string() + ":" + std::to_string(line);
        TaskSpec t;
        try {
            t.task_id = require_string(j, "task_id", where);
            t.task_type = parse_task_type(require_string(j, "task_type", where));
            t.split = parse_split(require_string(j, "split", where));
            t.format = parse_format(require_string(j, "format", where));
            t.metric = parse_metric(require_string(j, "metric", where));
            if (auto it = j.find("label_set"); it != j.end()) {
                if (!it->is_array()) {
                    throw DataError("label_set must be an array");
                }
                for (const auto& l : *it) {
                    if (!l.is_string()) {
                        throw DataError("label_set entries must be strings");
                    }
                    t.label_set.push_back(l.get<std::string>());
                }
            }
            if (auto it = j.find("arity"); it != j.end()) {
                if (!it->is_number_integer()) {
                    throw DataError("arity must be an integer");
                }
                t.arity = it->get<int>();
            }
            std::filesystem::path data = require_string(j, "data_path", where);
            t.data_path = data.is_absolute() ? data : (base / data).lexically_normal();
        } catch (const DataError& e) {
            std::string msg = e.what();
            if (msg.rfind(where, 0) == 0) {
                throw;
            }
            throw DataError(where + ": " + msg);
        }
        try {
            t.validate();
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        tasks.push_back(std::move(t));
    });
    return Registry(std::move(tasks));
}

void validate_example(const TaskSpec& task, const LabeledExample& ex, const std::string& where)
{
    if (ex.segments.size() != static_cast<std::size_t>(task.arity)) {
        throw DataError(where + ": arity mismatch: task '" + task.task_id + "' expects " +
                        std::to_string(task.arity) + " segment(s), record has " +
                        std::to_string(ex.segments.size()));
    }
    for (const auto& s : ex.segments) {
        if (s.find(kMaskMarker) != std::string::npos) {
            throw DataError(where + ": segment contains the reserved marker [MASK]");
        }
    }
    if (ex.gold_label.has_value() == ex.gold_text.has_value()) {
        throw DataError(where + ": exactly one of gold_label / gold_text must be present");
    }
    if (task.is_classification()) {
        if (!ex.gold_label) {
            throw DataError(where + ": classification record needs gold_label");
        }
        if (std::find(task.label_set.begin(), task.label_set.end(), *ex.gold_label) == task.label_set.end()) {
            throw DataError(where + ": unknown label '" + *ex.gold_label + "' for task '" + task.task_id + "'");
        }
    } else if (!ex.gold_text) {
        throw DataError(where + ": generation record needs gold_text");
    }
}

std::vector<LabeledExample> load_examples(const TaskSpec& task)
{
    std::vector<LabeledExample> out;
    std::unordered_set<std::string> ids;
    std::size_t index = 0;
    for_each_jsonl(task.data_path, [&](const Json& j, std::size_t line) {
        const std::string where = task.data_path.string() + ":" + std::to_string(line) +
                                  " (record " + std::to_string(index) + ")";
        LabeledExample ex;
        if (auto it = j.find("id"); it != j.end()) {
            if (!it->is_string()) {
                throw DataError(where + ": id must be a string");
            }
            ex.id = it->get<std::string>();
        } else {
            ex.id = task.task_id + ":" + std::to_string(line);
        }
        auto segs = j.find("segments");
        if (segs == j.end() || !segs->is_array()) {
            throw DataError(where + ": missing segments array");
        }
        for (const auto& s : *segs) {
            if (!s.is_string()) {
                throw DataError(where + ": segments must be strings");
            }
            ex.segments.push_back(s.get<std::string>());
        }
        if (auto it = j.find("gold_label"); it != j.end()) {
            if (!it->is_string()) {
                throw DataError(where + ": gold_label must be a string");
            }
            ex.gold_label = it->get<std::string>();
        }
        if (auto it = j.find("gold_text"); it != j.end()) {
            if (!it->is_string()) {
                throw DataError(where + ": gold_text must be a string");
            }
            ex.gold_text = it->get<std::string>();
        }
        validate_example(task, ex, where);
        if (!ids.insert(ex.id).second) {
            throw DataError(where + ": duplicate example id '" + ex.id + "'");
        }
        out.push_back(std::move(ex));
        ++index;
    });
    return out;
}

} // namespace zsp
