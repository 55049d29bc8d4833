// SPDX-License-Identifier: Apache-2.0

#include "zsp/run_config.hpp"

#include <cstdio>
#include <set>

#include "zsp/error.hpp"
#include "zsp/random.hpp"

namespace zsp {

namespace {

using protocol::Role;

void only_keys(const OrderedJson& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
        if (!ok.count(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T get(const OrderedJson& obj, const char* key, const std::string& where, T fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

std::size_t get_count(const OrderedJson& obj, const char* key, const std::string& where, std::size_t fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(where + "." + key + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

protocol::BackendEndpoint parse_endpoint(const OrderedJson& j, Role role)
{
    std::string where = "endpoints." + std::string(to_string(role));
    only_keys(j, where, {"base_url", "timeout_ms", "max_in_flight", "max_attempts", "backoff_ms"});
    protocol::BackendEndpoint e;
    e.role = role;
    e.base_url = get<std::string>(j, "base_url", where, "");
    e.timeout = std::chrono::milliseconds(get<long long>(j, "timeout_ms", where, e.timeout.count()));
    e.max_in_flight = get_count(j, "max_in_flight", where, e.max_in_flight);
    e.max_attempts = get<int>(j, "max_attempts", where, e.max_attempts);
    e.backoff = std::chrono::milliseconds(get<long long>(j, "backoff_ms", where, e.backoff.count()));
    try {
        e.validate();
    } catch (const Error& err) {
        throw ConfigError(where + ": " + err.what());
    }
    return e;
}

std::map<std::string, std::string> string_map(const OrderedJson& j, const std::string& where)
{
    if (!j.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_string()) {
            throw ConfigError(where + "." + k + " must be a string");
        }
        out[k] = v.get<std::string>();
    }
    return out;
}

} // namespace

ScorerKind parse_scorer_kind(std::string_view s)
{
    if (s == "dev_metric") {
        return ScorerKind::DevMetric;
    }
    if (s == "length") {
        return ScorerKind::Length;
    }
    throw ConfigError("unknown scorer '" + std::string(s) + "' (expected dev_metric or length)");
}

RunConfig parse_run_config(const OrderedJson& j, const std::filesystem::path& base_dir)
{
    only_keys(j, "config",
              {"registry", "templates", "output_dir", "seed", "endpoints", "gps", "mutation", "sampling", "dev_set",
               "contamination", "scoring", "self_training", "mock", "render"});
    RunConfig c;
    c.source = j;
    if (!j.contains("registry") || !j["registry"].is_string()) {
        throw ConfigError("config.registry is required");
    }
    c.registry = resolve(base_dir, j["registry"].get<std::string>());
    if (j.contains("templates")) {
        c.templates = resolve(base_dir, get<std::string>(j, "templates", "config", ""));
    }
    c.output_dir = resolve(base_dir, get<std::string>(j, "output_dir", "config", "runs"));
    if (!j.contains("seed") || !j["seed"].is_number_unsigned()) {
        throw ConfigError("config.seed is required and must be a non-negative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();

    if (j.contains("endpoints")) {
        only_keys(j["endpoints"], "endpoints", {"score", "generate", "translate", "embed"});
        for (const auto& [name, e] : j["endpoints"].items()) {
            Role role = protocol::parse_role(name);
            c.endpoints[role] = parse_endpoint(e, role);
        }
    }

    if (j.contains("gps")) {
        const auto& g = j["gps"];
        only_keys(g, "gps",
                  {"iterations", "top_k", "offspring_per_parent", "dedup", "mutator", "scorer", "runs",
                   "initial_templates"});
        c.gps.search.iterations = get<int>(g, "iterations", "gps", c.gps.search.iterations);
        c.gps.search.top_k = get_count(g, "top_k", "gps", c.gps.search.top_k);
        c.gps.search.offspring_per_parent = get<int>(g, "offspring_per_parent", "gps", c.gps.search.offspring_per_parent);
        c.gps.search.dedup = get<bool>(g, "dedup", "gps", c.gps.search.dedup);
        if (g.contains("mutator")) {
            c.gps.mutator = parse_mutator_kind(get<std::string>(g, "mutator", "gps", ""));
        }
        if (g.contains("scorer")) {
            c.gps.scorer = parse_scorer_kind(get<std::string>(g, "scorer", "gps", ""));
        }
        c.gps.runs = get<int>(g, "runs", "gps", c.gps.runs);
        c.gps.initial_templates = get<std::vector<std::string>>(g, "initial_templates", "gps", {});
    }
    if (c.gps.runs < 1) {
        throw ConfigError("gps.runs must be >= 1");
    }
    c.gps.search.validate();

    if (j.contains("mutation")) {
        const auto& m = j["mutation"];
        only_keys(m, "mutation",
                  {"mask_fraction", "max_retries", "source_lang", "pivot_lang", "meta_prompt", "max_new_tokens"});
        auto& o = c.mutation;
        o.mask_fraction = get<double>(m, "mask_fraction", "mutation", o.mask_fraction);
        o.max_retries = get<int>(m, "max_retries", "mutation", o.max_retries);
        o.source_lang = get<std::string>(m, "source_lang", "mutation", o.source_lang);
        o.pivot_lang = get<std::string>(m, "pivot_lang", "mutation", o.pivot_lang);
        o.meta_prompt = get<std::string>(m, "meta_prompt", "mutation", o.meta_prompt);
        o.max_new_tokens = get<int>(m, "max_new_tokens", "mutation", o.max_new_tokens);
    }

    if (j.contains("sampling")) {
        const auto& s = j["sampling"];
        only_keys(s, "sampling", {"per_class_cap", "per_task_cap", "overrides"});
        c.sampling.per_class_cap = get_count(s, "per_class_cap", "sampling", c.sampling.per_class_cap);
        c.sampling.per_task_cap = get_count(s, "per_task_cap", "sampling", c.sampling.per_task_cap);
        if (s.contains("overrides")) {
            c.sampling.overrides = get<std::map<std::string, std::size_t>>(s, "overrides", "sampling", {});
        }
    }
    try {
        c.sampling.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    if (j.contains("dev_set")) {
        const auto& d = j["dev_set"];
        only_keys(d, "dev_set", {"uniform_size", "per_label", "stratify_min_labels"});
        c.dev_set.uniform_size = get_count(d, "uniform_size", "dev_set", c.dev_set.uniform_size);
        c.dev_set.per_label = get_count(d, "per_label", "dev_set", c.dev_set.per_label);
        c.dev_set.stratify_min_labels = get_count(d, "stratify_min_labels", "dev_set", c.dev_set.stratify_min_labels);
    }

    if (j.contains("contamination")) {
        const auto& x = j["contamination"];
        only_keys(x, "contamination", {"n", "token_unit"});
        c.contamination.n = get_count(x, "n", "contamination", c.contamination.n);
        c.contamination.unit = text::parse_token_unit(get<std::string>(x, "token_unit", "contamination", "auto"));
    }
    if (c.contamination.n < 1) {
        throw ConfigError("contamination.n must be >= 1");
    }

    if (j.contains("scoring")) {
        const auto& s = j["scoring"];
        only_keys(s, "scoring", {"max_new_tokens", "positive_labels"});
        c.max_new_tokens = get<int>(s, "max_new_tokens", "scoring", c.max_new_tokens);
        if (s.contains("positive_labels")) {
            c.positive_labels = string_map(s["positive_labels"], "scoring.positive_labels");
        }
    }

    if (j.contains("self_training")) {
        const auto& s = j["self_training"];
        only_keys(s, "self_training", {"tau", "epochs", "tau_overrides", "unlabeled", "templates"});
        auto& st = c.self_training;
        st.config.tau = get<double>(s, "tau", "self_training", st.config.tau);
        st.config.epochs = get<int>(s, "epochs", "self_training", st.config.epochs);
        st.config.tau_overrides = get<std::map<std::string, double>>(s, "tau_overrides", "self_training", {});
        if (s.contains("unlabeled")) {
            for (const auto& [task, path] : string_map(s["unlabeled"], "self_training.unlabeled")) {
                st.unlabeled[task] = resolve(base_dir, path);
            }
        }
        if (s.contains("templates")) {
            st.templates = string_map(s["templates"], "self_training.templates");
        }
        st.config.validate();
    }

    if (j.contains("mock")) {
        try {
            c.mock = protocol::MockScript::from_json(Json::parse(j["mock"].dump()));
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("mock: ") + e.what());
        }
    }

    if (j.contains("render")) {
        const auto& r = j["render"];
        only_keys(r, "render", {"verbalizer_separator", "verbalizer_prefix", "verbalizer_suffix", "soft_marker"});
        auto& o = c.render;
        o.verbalizer_separator = get<std::string>(r, "verbalizer_separator", "render", o.verbalizer_separator);
        o.verbalizer_prefix = get<std::string>(r, "verbalizer_prefix", "render", o.verbalizer_prefix);
        o.verbalizer_suffix = get<std::string>(r, "verbalizer_suffix", "render", o.verbalizer_suffix);
        o.soft_marker = get<std::string>(r, "soft_marker", "render", o.soft_marker);
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::string body;
    try {
        body = read_text(path);
    } catch (const Error& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    OrderedJson j;
    try {
        j = OrderedJson::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

const protocol::BackendEndpoint& RunConfig::endpoint(protocol::Role role) const
{
    auto it = endpoints.find(role);
    if (it == endpoints.end()) {
        throw ConfigError("no endpoint declared for role '" + std::string(to_string(role)) + "'");
    }
    return it->second;
}

OrderedJson RunConfig::echo() const
{
    OrderedJson j = source;
    j["seed"] = seed;
    return j;
}

std::string RunConfig::hash() const
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(stable_hash(echo().dump())));
    return buf;
}

} // namespace zsp
