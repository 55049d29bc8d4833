// SPDX-License-Identifier: Apache-2.0

#include "zsp/commands.hpp"

#include <algorithm>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "zsp/contamination.hpp"
#include "zsp/dataset.hpp"
#include "zsp/error.hpp"
#include "zsp/gps.hpp"
#include "zsp/http_backend.hpp"
#include "zsp/mock_backend.hpp"
#include "zsp/mutation.hpp"
#include "zsp/run_config.hpp"
#include "zsp/scoring.hpp"
#include "zsp/self_training.hpp"

namespace zsp {

namespace {

using protocol::Role;

struct Context {
    const CommandOptions& opts;
    RunConfig config;
    Registry registry;
    std::filesystem::path run_dir;
    std::ostream& out;
    std::ostream& err;
};

// Backend clients for one command. In mock mode every role is served by an
// in-process MockServer on loopback; the pipeline still talks HTTP.
struct Backends {
    std::shared_ptr<protocol::MockBackend> mock;
    std::unique_ptr<protocol::MockServer> server;
    std::unique_ptr<protocol::HttpScoreClient> score;
    std::unique_ptr<protocol::HttpGenerateClient> generate;
    std::unique_ptr<protocol::HttpTranslateClient> translate;
    std::unique_ptr<protocol::HttpEmbedClient> embed;
    std::unique_ptr<protocol::HttpRefreshClient> refresh;

    ScoringClients scoring() const { return {score.get(), generate.get()}; }
    MutatorClients mutation() const { return {generate.get(), translate.get()}; }
};

Backends connect(const Context& ctx)
{
    Backends b;
    std::map<Role, protocol::BackendEndpoint> endpoints = ctx.config.endpoints;
    if (ctx.opts.mock) {
        auto script = ctx.config.mock;
        for (const auto& task : ctx.registry.tasks()) {
            for (const auto& ex : load_examples(task)) {
                script.entries.push_back({ex.segments, ex.gold_label, ex.gold_text, {}, std::nullopt, std::nullopt});
            }
        }
        b.mock = std::make_shared<protocol::MockBackend>(std::move(script));
        b.server = std::make_unique<protocol::MockServer>(b.mock);
        for (Role r : {Role::Score, Role::Generate, Role::Translate, Role::Embed}) {
            endpoints[r] = b.server->endpoint(r, std::chrono::milliseconds(30000), ctx.opts.workers);
        }
    }
    if (auto it = endpoints.find(Role::Score); it != endpoints.end()) {
        b.score = std::make_unique<protocol::HttpScoreClient>(it->second);
        b.refresh = std::make_unique<protocol::HttpRefreshClient>(it->second);
    }
    if (auto it = endpoints.find(Role::Generate); it != endpoints.end()) {
        b.generate = std::make_unique<protocol::HttpGenerateClient>(it->second);
    }
    if (auto it = endpoints.find(Role::Translate); it != endpoints.end()) {
        b.translate = std::make_unique<protocol::HttpTranslateClient>(it->second);
    }
    if (auto it = endpoints.find(Role::Embed); it != endpoints.end()) {
        b.embed = std::make_unique<protocol::HttpEmbedClient>(it->second);
    }
    return b;
}

const TaskSpec& require_task(const Context& ctx)
{
    if (!ctx.opts.task) {
        throw ConfigError("--task is required for this command");
    }
    const TaskSpec* t = ctx.registry.find(*ctx.opts.task);
    if (t == nullptr) {
        throw ConfigError("unknown task '" + *ctx.opts.task + "'");
    }
    return *t;
}

// Tasks named by --task, or every task of the given split.
std::vector<const TaskSpec*> selected_tasks(const Context& ctx, Split split)
{
    if (ctx.opts.task) {
        return {&require_task(ctx)};
    }
    return ctx.registry.by_split(split);
}

OrderedJson example_json(const LabeledExample& ex)
{
    OrderedJson j{{"id", ex.id}, {"segments", ex.segments}};
    if (ex.gold_label) {
        j["gold_label"] = *ex.gold_label;
    }
    if (ex.gold_text) {
        j["gold_text"] = *ex.gold_text;
    }
    return j;
}

void write_examples(const std::filesystem::path& path, std::span<const LabeledExample> examples)
{
    std::vector<OrderedJson> rows;
    rows.reserve(examples.size());
    for (const auto& ex : examples) {
        rows.push_back(example_json(ex));
    }
    write_jsonl(path, rows);
}

OrderedJson report_header(const Context& ctx, const char* command)
{
    return OrderedJson{{"command", command}, {"seed", ctx.config.seed}};
}

void write_report(const Context& ctx, const std::string& stem, OrderedJson report, const std::string& table)
{
    report["config"] = ctx.config.echo();
    write_text(ctx.run_dir / (stem + ".json"), report.dump(2) + "\n");
    write_text(ctx.run_dir / (stem + ".txt"), table);
    ctx.out << table;
    ctx.out << "report: " << (ctx.run_dir / (stem + ".json")).string() << "\n";
}

class Table {
public:
    explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    std::string str() const
    {
        std::vector<std::size_t> width;
        for (const auto& r : rows_) {
            width.resize(std::max(width.size(), r.size()), 0);
            for (std::size_t i = 0; i < r.size(); ++i) {
                width[i] = std::max(width[i], text::length(r[i]));
            }
        }
        std::ostringstream os;
        for (std::size_t k = 0; k < rows_.size(); ++k) {
            for (std::size_t i = 0; i < rows_[k].size(); ++i) {
                os << (i ? "  " : "") << rows_[k][i];
                if (i + 1 < rows_[k].size()) {
                    os << std::string(width[i] - text::length(rows_[k][i]), ' ');
                }
            }
            os << "\n";
            if (k == 0) {
                std::size_t total = 0;
                for (auto w : width) {
                    total += w;
                }
                os << std::string(total + 2 * (width.size() - 1), '-') << "\n";
            }
        }
        return os.str();
    }

private:
    std::vector<std::vector<std::string>> rows_;
};

struct Spread {
    double avg = 0.0, max = 0.0, min = 0.0;
};

Spread spread(const std::vector<double>& v)
{
    Spread s{0.0, v.front(), v.front()};
    for (double x : v) {
        s.avg += x;
        s.max = std::max(s.max, x);
        s.min = std::min(s.min, x);
    }
    s.avg /= static_cast<double>(v.size());
    return s;
}

OrderedJson to_json(const Spread& s)
{
    return OrderedJson{{"avg", s.avg}, {"max", s.max}, {"min", s.min}};
}

// Examples a task may train on: test-split tasks lose their dev set first.
std::vector<LabeledExample> trainable_examples(const Context& ctx, const TaskSpec& task)
{
    auto examples = load_examples(task);
    if (task.split == Split::Test) {
        return build_dev_set(task, examples, ctx.config.seed, ctx.config.dev_set).remaining;
    }
    return examples;
}

std::vector<LabeledExample> dev_examples(const Context& ctx, const TaskSpec& task)
{
    auto split = build_dev_set(task, load_examples(task), ctx.config.seed, ctx.config.dev_set);
    for (const auto& w : split.warnings) {
        ctx.err << "warning: " << w << "\n";
    }
    return split.dev;
}

ScoringOptions scoring_options(const Context& ctx, const TaskSpec& task)
{
    ScoringOptions o;
    o.render = ctx.config.render;
    o.max_in_flight = ctx.opts.workers;
    o.max_new_tokens = ctx.config.max_new_tokens;
    if (auto it = ctx.config.positive_labels.find(task.task_id); it != ctx.config.positive_labels.end()) {
        o.positive_label = it->second;
    }
    return o;
}

std::vector<NamedTemplate> task_templates(const Context& ctx, const std::string& task_id)
{
    if (ctx.config.templates.empty()) {
        throw ConfigError("config.templates is required for this command");
    }
    std::vector<NamedTemplate> out;
    for (auto& t : load_templates(ctx.config.templates)) {
        if (t.task_id == task_id) {
            out.push_back(std::move(t));
        }
    }
    return out;
}

int cmd_filter(Context& ctx)
{
    std::vector<TextDocument> protected_docs;
    for (const auto* task : ctx.registry.by_split(Split::Test)) {
        for (const auto& ex : load_examples(*task)) {
            auto doc = document_of(ex);
            doc.id = task->task_id + "/" + ex.id;
            protected_docs.push_back(std::move(doc));
        }
    }
    const auto& cc = ctx.config.contamination;
    auto index = build_ngram_index(protected_docs, cc.n, cc.unit, ctx.opts.workers);

    auto report = report_header(ctx, "filter");
    report["n"] = cc.n;
    report["token_unit"] = std::string(text::to_string(index.unit()));
    report["protected_documents"] = protected_docs.size();
    report["protected_ngrams"] = index.size();
    OrderedJson tasks = OrderedJson::array();
    OrderedJson removed = OrderedJson::array();
    Table table({"task", "total", "kept", "removed"});
    std::size_t removed_total = 0;
    for (const auto* task : selected_tasks(ctx, Split::Train)) {
        auto examples = load_examples(*task);
        auto result = contamination_filter(examples, index, ctx.opts.workers);
        write_examples(ctx.run_dir / "filtered" / (task->task_id + ".jsonl"), result.kept);
        for (const auto& r : result.removed) {
            removed.push_back(OrderedJson{{"task_id", task->task_id}, {"id", r.example.id}, {"matched", r.matched_id}});
        }
        removed_total += result.removed.size();
        tasks.push_back(OrderedJson{{"task_id", task->task_id},
                                    {"total", examples.size()},
                                    {"kept", result.kept.size()},
                                    {"removed", result.removed.size()}});
        table.add({task->task_id, std::to_string(examples.size()), std::to_string(result.kept.size()),
                   std::to_string(result.removed.size())});
    }
    report["removed_total"] = removed_total;
    report["tasks"] = tasks;
    report["removed"] = removed;
    write_report(ctx, "filter-report", report, table.str() + "removed: " + std::to_string(removed_total) + "\n");
    return 0;
}

int cmd_sample(Context& ctx)
{
    auto report = report_header(ctx, "sample");
    OrderedJson tasks = OrderedJson::array();
    Table table({"task", "available", "sampled"});
    for (const auto* task : selected_tasks(ctx, Split::Train)) {
        auto examples = trainable_examples(ctx, *task);
        auto pool = sample_training_pool(*task, examples, ctx.config.sampling, ctx.config.seed);
        write_examples(ctx.run_dir / "pools" / (task->task_id + ".jsonl"), pool);
        OrderedJson entry{{"task_id", task->task_id}, {"available", examples.size()}, {"sampled", pool.size()}};
        if (task->is_classification()) {
            OrderedJson per_class = OrderedJson::object();
            for (const auto& label : task->label_set) {
                per_class[label] = std::count_if(pool.begin(), pool.end(),
                                                 [&](const LabeledExample& e) { return e.gold_label == label; });
            }
            entry["per_class"] = per_class;
        }
        tasks.push_back(entry);
        table.add({task->task_id, std::to_string(examples.size()), std::to_string(pool.size())});
    }
    report["tasks"] = tasks;
    write_report(ctx, "sample-report", report, table.str());
    return 0;
}

int cmd_dev_set(Context& ctx)
{
    auto report = report_header(ctx, "dev-set");
    OrderedJson tasks = OrderedJson::array();
    Table table({"task", "labels", "available", "dev"});
    for (const auto* task : selected_tasks(ctx, Split::Test)) {
        auto examples = load_examples(*task);
        auto split = build_dev_set(*task, examples, ctx.config.seed, ctx.config.dev_set);
        for (const auto& w : split.warnings) {
            ctx.err << "warning: " << w << "\n";
        }
        write_examples(ctx.run_dir / "dev" / (task->task_id + ".jsonl"), split.dev);
        tasks.push_back(OrderedJson{{"task_id", task->task_id},
                                    {"available", examples.size()},
                                    {"dev", split.dev.size()},
                                    {"warnings", split.warnings}});
        table.add({task->task_id, std::to_string(task->label_set.size()), std::to_string(examples.size()),
                   std::to_string(split.dev.size())});
    }
    report["tasks"] = tasks;
    write_report(ctx, "dev-report", report, table.str());
    return 0;
}

int cmd_run_gps(Context& ctx)
{
    const auto& task = require_task(ctx);
    auto named = task_templates(ctx, task.task_id);
    const auto& wanted = ctx.config.gps.initial_templates;
    std::vector<PromptTemplate> g0;
    for (const auto& t : named) {
        if (wanted.empty() || std::find(wanted.begin(), wanted.end(), t.id) != wanted.end()) {
            g0.push_back(t.prompt);
        }
    }
    if (g0.empty()) {
        throw ConfigError("no initial templates for task '" + task.task_id + "'");
    }
    auto dev = dev_examples(ctx, task);
    Backends backends = connect(ctx);

    ScoreFn scorer;
    if (ctx.config.gps.scorer == ScorerKind::Length) {
        scorer = instruction_length_scorer();
    } else {
        auto clients = backends.scoring();
        auto options = scoring_options(ctx, task);
        // Candidates are already scored in parallel; keep each scoring call
        // serial so in-flight requests stay within the worker budget.
        options.max_in_flight = 1;
        scorer = [&task, clients, options](const PromptTemplate& t, std::span<const LabeledExample> d) {
            return score_prompt(t, task, d, clients, options);
        };
    }
    MutateFn mutator = make_mutator(ctx.config.gps.mutator, backends.mutation(), ctx.config.mutation);

    auto report = report_header(ctx, "run-gps");
    report["task_id"] = task.task_id;
    report["dev_size"] = dev.size();
    OrderedJson runs = OrderedJson::array();
    std::vector<double> manual, best;
    for (int r = 0; r < ctx.config.gps.runs; ++r) {
        GpsConfig cfg = ctx.config.gps.search;
        cfg.rng_seed = derive_seed(ctx.config.seed, {static_cast<std::uint64_t>(r)});
        cfg.workers = ctx.opts.workers;
        auto result = run_gps(g0, dev, scorer, mutator, cfg);
        double m = *result.generations.front().candidates.front().score;
        for (const auto& c : result.generations.front().candidates) {
            m = std::max(m, *c.score);
        }
        manual.push_back(m);
        best.push_back(*result.final_top_k.front().score);
        runs.push_back(OrderedJson{{"run", r},
                                   {"rng_seed", cfg.rng_seed},
                                   {"manual_best", m},
                                   {"final_best", best.back()},
                                   {"result", to_json(result)}});
    }
    auto ms = spread(manual);
    auto bs = spread(best);
    report["runs"] = runs;
    report["summary"] = OrderedJson{{"runs", ctx.config.gps.runs}, {"manual_best", to_json(ms)}, {"final_best", to_json(bs)}};
    Table table({"task", "method", "Avg", "Max", "Min"});
    table.add({task.task_id, "manual", format_metric(ms.avg), format_metric(ms.max), format_metric(ms.min)});
    table.add({task.task_id, "gps", format_metric(bs.avg), format_metric(bs.max), format_metric(bs.min)});
    write_report(ctx, "gps-" + task.task_id, report, table.str());
    return 0;
}

int cmd_eval(Context& ctx)
{
    const auto& task = require_task(ctx);
    if (!ctx.opts.template_id) {
        throw ConfigError("--template is required for eval");
    }
    const NamedTemplate* chosen = nullptr;
    auto named = task_templates(ctx, task.task_id);
    for (const auto& t : named) {
        if (t.id == *ctx.opts.template_id) {
            chosen = &t;
        }
    }
    if (chosen == nullptr) {
        throw ConfigError("unknown template '" + *ctx.opts.template_id + "' for task '" + task.task_id + "'");
    }
    auto dev = dev_examples(ctx, task);
    Backends backends = connect(ctx);
    auto ev = evaluate_prompt(chosen->prompt, task, dev, backends.scoring(), scoring_options(ctx, task));

    auto report = report_header(ctx, "eval");
    report["task_id"] = task.task_id;
    report["template_id"] = chosen->id;
    report["metric"] = std::string(to_string(ev.metric));
    report["value"] = ev.value;
    report["dev_size"] = dev.size();
    Table table({"task", "template", "metric", "value", "dev"});
    table.add({task.task_id, chosen->id, std::string(to_string(ev.metric)), format_metric(ev.value),
               std::to_string(dev.size())});
    write_report(ctx, "eval-" + task.task_id + "-" + chosen->id, report, table.str());
    return 0;
}

int cmd_self_train(Context& ctx)
{
    const auto& st = ctx.config.self_training;
    if (st.unlabeled.empty()) {
        throw ConfigError("self_training.unlabeled names no task");
    }
    std::vector<SelfTrainTask> tasks;
    std::map<std::string, PromptTemplate> templates;
    for (const auto& [task_id, pool_path] : st.unlabeled) {
        if (ctx.opts.task && *ctx.opts.task != task_id) {
            continue;
        }
        const TaskSpec* task = ctx.registry.find(task_id);
        if (task == nullptr) {
            throw ConfigError("self_training.unlabeled names unknown task '" + task_id + "'");
        }
        auto tid = st.templates.find(task_id);
        if (tid == st.templates.end()) {
            throw ConfigError("self_training.templates has no entry for '" + task_id + "'");
        }
        bool found = false;
        for (const auto& t : task_templates(ctx, task_id)) {
            if (t.id == tid->second) {
                templates[task_id] = t.prompt;
                found = true;
            }
        }
        if (!found) {
            throw ConfigError("unknown template '" + tid->second + "' for task '" + task_id + "'");
        }
        auto pool = sample_training_pool(*task, trainable_examples(ctx, *task), ctx.config.sampling, ctx.config.seed);
        tasks.push_back({*task, std::move(pool), load_unlabeled(pool_path)});
    }
    if (tasks.empty()) {
        throw ConfigError("no self-training task selected");
    }
    Backends backends = connect(ctx);
    BackendModelClient model(templates, backends.scoring(), backends.refresh.get(), ctx.config.render,
                             ctx.config.max_new_tokens);
    SelfTrainConfig cfg = st.config;
    cfg.max_in_flight = ctx.opts.workers;
    auto result = self_train(model, tasks, cfg);

    auto report = report_header(ctx, "self-train");
    report["metadata"] = self_train_metadata(cfg);
    OrderedJson rounds = OrderedJson::array();
    for (const auto& r : result.rounds) {
        rounds.push_back(to_json(r));
    }
    report["rounds"] = rounds;
    report["error"] = result.error ? OrderedJson(*result.error) : OrderedJson(nullptr);
    Table table({"task", "original", "pseudo", "pool_left"});
    OrderedJson sizes = OrderedJson::array();
    for (const auto& t : tasks) {
        const auto& records = result.train.at(t.task.task_id);
        std::vector<OrderedJson> rows;
        std::size_t pseudo = 0;
        for (const auto& r : records) {
            rows.push_back(to_json(r, t.task));
            pseudo += r.pseudo ? 1 : 0;
        }
        write_jsonl(ctx.run_dir / "augmented" / (t.task.task_id + ".jsonl"), rows);
        const auto left = result.pool.at(t.task.task_id).size();
        sizes.push_back(OrderedJson{{"task_id", t.task.task_id},
                                    {"original", records.size() - pseudo},
                                    {"pseudo", pseudo},
                                    {"pool_left", left}});
        table.add({t.task.task_id, std::to_string(records.size() - pseudo), std::to_string(pseudo),
                   std::to_string(left)});
    }
    report["tasks"] = sizes;
    write_report(ctx, "self-train-report", report, table.str());
    if (result.error) {
        ctx.err << "error: " << *result.error << "\n";
        return result.error_exit_code;
    }
    return 0;
}

int cmd_report(Context& ctx)
{
    if (!std::filesystem::is_directory(ctx.run_dir)) {
        throw DataError("no run directory at " + ctx.run_dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(ctx.run_dir)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() == ".json" && (name.rfind("gps-", 0) == 0 || name.rfind("eval-", 0) == 0)) {
            files.push_back(entry.path());
        }
    }
    if (files.empty()) {
        throw DataError("no gps or eval reports in " + ctx.run_dir.string());
    }
    std::sort(files.begin(), files.end());
    Table table({"task", "method", "runs", "Avg", "Max", "Min"});
    OrderedJson rows = OrderedJson::array();
    for (const auto& f : files) {
        OrderedJson j;
        try {
            j = OrderedJson::parse(read_text(f));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(f.string() + ": " + e.what());
        }
        const auto task = j.value("task_id", std::string("?"));
        if (j.value("command", std::string()) == "run-gps") {
            const auto& s = j["summary"];
            for (const char* key : {"manual_best", "final_best"}) {
                std::string method = std::string(key) == "manual_best" ? "manual" : "gps";
                table.add({task, method, std::to_string(s["runs"].get<int>()), format_metric(s[key]["avg"]),
                           format_metric(s[key]["max"]), format_metric(s[key]["min"])});
                rows.push_back(OrderedJson{{"task_id", task}, {"method", method}, {"runs", s["runs"]}, {"score", s[key]}});
            }
        } else {
            const double v = j["value"].get<double>();
            std::string method = "template:" + j.value("template_id", std::string("?"));
            table.add({task, method, "1", format_metric(v), format_metric(v), format_metric(v)});
            rows.push_back(OrderedJson{{"task_id", task}, {"method", method}, {"runs", 1}, {"score", v}});
        }
    }
    auto report = report_header(ctx, "report");
    report["rows"] = rows;
    write_report(ctx, "summary", report, table.str());
    return 0;
}

int dispatch(const std::string& name, Context& ctx)
{
    if (name == "filter") {
        return cmd_filter(ctx);
    }
    if (name == "sample") {
        return cmd_sample(ctx);
    }
    if (name == "dev-set") {
        return cmd_dev_set(ctx);
    }
    if (name == "run-gps") {
        return cmd_run_gps(ctx);
    }
    if (name == "eval") {
        return cmd_eval(ctx);
    }
    if (name == "self-train") {
        return cmd_self_train(ctx);
    }
    if (name == "report") {
        return cmd_report(ctx);
    }
    throw ConfigError("unknown command '" + name + "'");
}

} // namespace

const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names{"filter", "sample", "dev-set", "run-gps", "eval", "self-train", "report"};
    return names;
}

int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err)
{
    try {
        RunConfig config = load_run_config(options.config);
        if (options.seed) {
            config.seed = *options.seed;
        }
        if (options.workers < 1) {
            throw ConfigError("--workers must be >= 1");
        }
        Registry registry;
        try {
            registry = load_registry(config.registry);
        } catch (const DataError& e) {
            if (!std::filesystem::exists(config.registry)) {
                throw ConfigError(std::string("registry: ") + e.what());
            }
            throw;
        }
        const auto root = options.out ? *options.out : config.output_dir;
        Context ctx{options, std::move(config), std::move(registry), {}, out, err};
        ctx.run_dir = root / ("run-" + ctx.config.hash());
        return dispatch(name, ctx);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const BackendError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace zsp
