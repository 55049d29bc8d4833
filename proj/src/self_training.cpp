// SPDX-License-Identifier: Apache-2.0

#include "zsp/self_training.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "zsp/error.hpp"
#include "zsp/parallel.hpp"

namespace zsp {

std::string UnlabeledExample::text() const
{
    std::string out;
    for (const auto& s : segments) {
        if (!out.empty()) {
            out += '\n';
        }
        out += s;
    }
    return out;
}

std::vector<UnlabeledExample> load_unlabeled(const std::filesystem::path& path)
{
    std::vector<UnlabeledExample> out;
    std::set<std::string> seen;
    for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
        auto where = path.string() + ":" + std::to_string(line) + ": ";
        if (!rec.is_object() || !rec.contains("source_id") || !rec["source_id"].is_string()) {
            throw DataError(where + "missing string field 'source_id'");
        }
        if (!rec.contains("segments") || !rec["segments"].is_array() || rec["segments"].empty()) {
            throw DataError(where + "missing non-empty 'segments'");
        }
        UnlabeledExample ex;
        ex.source_id = rec["source_id"].get<std::string>();
        for (const auto& s : rec["segments"]) {
            if (!s.is_string()) {
                throw DataError(where + "segments must be strings");
            }
            ex.segments.push_back(s.get<std::string>());
        }
        if (rec.contains("embedding")) {
            std::vector<double> v;
            for (const auto& x : rec["embedding"]) {
                if (!x.is_number() || !std::isfinite(x.get<double>())) {
                    throw DataError(where + "embedding must hold finite numbers");
                }
                v.push_back(x.get<double>());
            }
            ex.embedding = std::move(v);
        }
        if (!seen.insert(ex.source_id).second) {
            throw DataError(where + "duplicate source_id '" + ex.source_id + "'");
        }
        out.push_back(std::move(ex));
    });
    return out;
}

double cosine(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw DataError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw DataError("cosine: zero-norm vector");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Retrieved> retrieve_similar(std::span<const UnlabeledExample> pool,
                                        std::span<const std::vector<double>> queries, std::size_t k,
                                        protocol::EmbedClient* embed)
{
    if (k < 1) {
        throw ConfigError("retrieve_similar: k must be >= 1");
    }
    if (queries.empty()) {
        throw DataError("retrieve_similar: no query vectors");
    }
    std::vector<Retrieved> items;
    items.reserve(pool.size());
    protocol::EmbedRequest missing;
    std::vector<std::size_t> missing_at;
    for (const auto& ex : pool) {
        items.push_back({ex, 0.0});
        if (!ex.embedding) {
            missing.texts.push_back(ex.text());
            missing_at.push_back(items.size() - 1);
        }
    }
    if (!missing_at.empty()) {
        if (embed == nullptr) {
            throw ConfigError("pool items lack embeddings and no embed endpoint is configured");
        }
        auto resp = embed->embed(missing);
        protocol::check_embed_response(missing, resp);
        for (std::size_t i = 0; i < missing_at.size(); ++i) {
            items[missing_at[i]].example.embedding = resp.vectors[i];
        }
    }
    for (auto& item : items) {
        double best = -2.0;
        for (const auto& q : queries) {
            best = std::max(best, cosine(*item.example.embedding, q));
        }
        item.similarity = best;
    }
    std::stable_sort(items.begin(), items.end(), [](const Retrieved& a, const Retrieved& b) {
        if (a.similarity != b.similarity) {
            return a.similarity > b.similarity;
        }
        return a.example.source_id < b.example.source_id;
    });
    if (items.size() > k) {
        items.resize(k);
    }
    return items;
}

BackendModelClient::BackendModelClient(std::map<std::string, PromptTemplate> templates, ScoringClients clients,
                                       protocol::RefreshClient* refresh, RenderOptions render, int max_new_tokens)
    : templates_(std::move(templates)),
      clients_(clients),
      refresh_(refresh),
      render_(std::move(render)),
      max_new_tokens_(max_new_tokens)
{
}

Inference BackendModelClient::infer(const TaskSpec& task, const UnlabeledExample& example)
{
    auto it = templates_.find(task.task_id);
    if (it == templates_.end()) {
        throw ConfigError("no prompt template for task '" + task.task_id + "'");
    }
    LabeledExample ex;
    ex.id = example.source_id;
    ex.segments = example.segments;
    auto rendered = render(it->second, ex, render_);
    Inference out;
    if (task.is_classification()) {
        if (clients_.score == nullptr) {
            throw ConfigError("classification task '" + task.task_id + "' needs a score endpoint");
        }
        protocol::ScoreRequest req{rendered.text, rendered.mask_offset, task.label_set, it->second.soft_slot_len};
        auto matched = protocol::match_choices(req, clients_.score->score(req));
        std::vector<ChoiceScore> scores;
        for (const auto& c : matched) {
            scores.push_back(to_choice_score(c));
        }
        auto probs = choice_probabilities(scores);
        std::size_t best = 0;
        for (std::size_t i = 1; i < probs.size(); ++i) {
            if (scores[i].length_normalized > scores[best].length_normalized) {
                best = i;
            }
        }
        out.prediction = scores[best].choice;
        out.confidence = probs[best];
    } else {
        if (clients_.generate == nullptr) {
            throw ConfigError("generation task '" + task.task_id + "' needs a generate endpoint");
        }
        auto resp = clients_.generate->generate({rendered.text, max_new_tokens_, 0.0});
        if (resp.token_logprobs.empty()) {
            throw protocol::ProtocolError("generate response for '" + example.source_id +
                                          "' has no token_logprobs; confidence is undefined");
        }
        double sum = 0.0;
        for (double lp : resp.token_logprobs) {
            sum += std::exp(lp);
        }
        out.prediction = std::string(text::trim(resp.completion_text));
        out.confidence = sum / static_cast<double>(resp.token_logprobs.size());
    }
    return out;
}

std::int64_t BackendModelClient::refresh()
{
    if (refresh_ == nullptr) {
        throw ConfigError("self-training needs a refresh endpoint");
    }
    return refresh_->refresh();
}

void SelfTrainConfig::validate() const
{
    auto check = [](double t, const std::string& what) {
        if (!(t > 0.0 && t <= 1.0)) {
            throw ConfigError(what + " must be in (0,1]");
        }
    };
    check(tau, "tau");
    for (const auto& [id, t] : tau_overrides) {
        check(t, "tau override for '" + id + "'");
    }
    if (epochs < 1) {
        throw ConfigError("self-training epochs must be >= 1");
    }
}

double SelfTrainConfig::tau_for(const std::string& task_id) const
{
    auto it = tau_overrides.find(task_id);
    return it == tau_overrides.end() ? tau : it->second;
}

SelfTrainResult self_train(ModelClient& model, std::span<const SelfTrainTask> tasks, const SelfTrainConfig& config)
{
    config.validate();
    SelfTrainResult result;
    std::map<std::string, std::set<std::string>> ids;
    for (const auto& t : tasks) {
        if (result.train.count(t.task.task_id)) {
            throw ConfigError("task '" + t.task.task_id + "' listed twice for self-training");
        }
        auto& records = result.train[t.task.task_id];
        for (const auto& ex : t.train) {
            records.push_back({ex, false, 1.0, -1, 0});
            ids[t.task.task_id].insert(ex.id);
        }
        result.pool[t.task.task_id] = t.pool;
    }

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Additions are staged and only committed once the whole epoch has
        // succeeded.
        EpochStats stats;
        stats.epoch = epoch;
        std::vector<std::vector<AugmentedRecord>> staged(tasks.size());
        std::vector<std::vector<char>> consumed(tasks.size());
        try {
            stats.model_version = model.refresh();
            for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
                const auto& task = tasks[ti].task;
                const auto& pool = result.pool[task.task_id];
                const double tau = config.tau_for(task.task_id);
                std::vector<Inference> inferred(pool.size());
                parallel_for(pool.size(), config.max_in_flight, [&](std::size_t i) {
                    inferred[i] = model.infer(task, pool[i]);
                    if (!(inferred[i].confidence >= 0.0 && inferred[i].confidence <= 1.0)) {
                        throw BackendError("confidence for '" + pool[i].source_id + "' is outside [0,1]");
                    }
                });
                TaskRoundStats ts{task.task_id, pool.size(), 0, 0.0};
                consumed[ti].assign(pool.size(), 0);
                std::set<std::string> taken = ids[task.task_id];
                double conf_sum = 0.0;
                for (std::size_t i = 0; i < pool.size(); ++i) {
                    if (inferred[i].confidence < tau) {
                        continue;
                    }
                    consumed[ti][i] = 1;
                    if (!taken.insert(pool[i].source_id).second) {
                        continue;
                    }
                    LabeledExample ex;
                    ex.id = pool[i].source_id;
                    ex.segments = pool[i].segments;
                    if (task.is_classification()) {
                        ex.gold_label = inferred[i].prediction;
                    } else {
                        ex.gold_text = inferred[i].prediction;
                    }
                    staged[ti].push_back({std::move(ex), true, inferred[i].confidence, epoch, stats.model_version});
                    conf_sum += inferred[i].confidence;
                }
                ts.added = staged[ti].size();
                ts.mean_confidence = ts.added ? conf_sum / static_cast<double>(ts.added) : 0.0;
                stats.tasks.push_back(ts);
            }
        } catch (const Error& e) {
            result.error = "self-training epoch " + std::to_string(epoch) + " aborted: " + e.what();
            result.error_exit_code = dynamic_cast<const ConfigError*>(&e)    ? 1
                                     : dynamic_cast<const BackendError*>(&e) ? 2
                                                                              : 3;
            return result;
        }
        for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
            const auto& id = tasks[ti].task.task_id;
            auto& records = result.train[id];
            for (auto& r : staged[ti]) {
                ids[id].insert(r.example.id);
                records.push_back(std::move(r));
            }
            auto& pool = result.pool[id];
            std::vector<UnlabeledExample> rest;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (!consumed[ti][i]) {
                    rest.push_back(std::move(pool[i]));
                }
            }
            pool = std::move(rest);
        }
        result.rounds.push_back(std::move(stats));
    }
    return result;
}

OrderedJson self_train_metadata(const SelfTrainConfig& config)
{
    OrderedJson overrides = OrderedJson::object();
    for (const auto& [id, t] : config.tau_overrides) {
        overrides[id] = t;
    }
    return OrderedJson{
        {"confidence_rule",
         {{"classification", "softmax probability of the top choice over length-normalized scores"},
          {"generation", "mean per-token probability of the greedy completion"}}},
        {"tau", config.tau},
        {"tau_overrides", overrides},
        {"epochs", config.epochs},
        {"selected_leave_pool", true},
        {"dedup_key", "source_id"},
        {"epoch_failure", "epoch discarded, earlier epochs kept"},
    };
}

OrderedJson to_json(const AugmentedRecord& r, const TaskSpec& task)
{
    OrderedJson j{{"task_id", task.task_id}, {"id", r.example.id}, {"segments", r.example.segments}};
    if (r.example.gold_label) {
        j["gold_label"] = *r.example.gold_label;
    }
    if (r.example.gold_text) {
        j["gold_text"] = *r.example.gold_text;
    }
    j["pseudo"] = r.pseudo;
    if (r.pseudo) {
        j["confidence"] = r.confidence;
        j["epoch"] = r.epoch;
        j["model_version"] = r.model_version;
    }
    return j;
}

OrderedJson to_json(const EpochStats& s)
{
    OrderedJson tasks = OrderedJson::array();
    for (const auto& t : s.tasks) {
        tasks.push_back(OrderedJson{{"task_id", t.task_id},
                                    {"inferred", t.inferred},
                                    {"added", t.added},
                                    {"mean_confidence", t.mean_confidence}});
    }
    return OrderedJson{{"epoch", s.epoch}, {"model_version", s.model_version}, {"tasks", tasks}};
}

} // namespace zsp
