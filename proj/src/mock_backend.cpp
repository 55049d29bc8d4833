// SPDX-License-Identifier: Apache-2.0

#include "zsp/mock_backend.hpp"

#include <cmath>
#include <functional>

#include <httplib.h>

#include "zsp/random.hpp"
#include "zsp/text.hpp"

namespace zsp::protocol {

namespace {

int token_count(const std::string& s)
{
    return std::max<int>(1, static_cast<int>(text::length(s)));
}

} // namespace

MockScript MockScript::from_json(const Json& j)
{
    MockScript s;
    if (j.is_null()) {
        return s;
    }
    if (!j.is_object()) {
        throw ConfigError("mock script must be an object");
    }
    try {
        auto mode = j.value("score_mode", std::string("hash"));
        if (mode == "hash") {
            s.score_mode = MockScoreMode::Hash;
        } else if (mode == "oracle") {
            s.score_mode = MockScoreMode::Oracle;
        } else {
            throw ConfigError("mock score_mode must be hash|oracle, got '" + mode + "'");
        }
        if (auto it = j.find("entries"); it != j.end()) {
            for (const auto& e : *it) {
                MockEntry m;
                m.segments = e.at("segments").get<std::vector<std::string>>();
                if (e.contains("gold_label")) m.gold_label = e["gold_label"].get<std::string>();
                if (e.contains("gold_text")) m.gold_text = e["gold_text"].get<std::string>();
                if (e.contains("scores")) m.scores = e["scores"].get<std::map<std::string, double>>();
                if (e.contains("completion")) m.completion = e["completion"].get<std::string>();
                if (e.contains("confidence")) m.confidence = e["confidence"].get<double>();
                s.entries.push_back(std::move(m));
            }
        }
        if (auto it = j.find("rewrites"); it != j.end()) {
            for (const auto& r : *it) {
                s.rewrites.emplace_back(r.at("from").get<std::string>(), r.at("to").get<std::string>());
            }
        }
        s.embed_dim = j.value("embed_dim", s.embed_dim);
        if (auto it = j.find("vectors"); it != j.end()) {
            s.vectors = it->get<std::map<std::string, std::vector<double>>>();
        }
        s.infill_pool = j.value("infill_pool", s.infill_pool);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("bad mock script: ") + e.what());
    }
    if (s.embed_dim == 0) {
        throw ConfigError("mock embed_dim must be positive");
    }
    if (s.infill_pool.empty()) {
        throw ConfigError("mock infill_pool must not be empty");
    }
    return s;
}

Json MockScript::to_json() const
{
    Json entries_json = Json::array();
    for (const auto& e : entries) {
        Json j = {{"segments", e.segments}};
        if (e.gold_label) j["gold_label"] = *e.gold_label;
        if (e.gold_text) j["gold_text"] = *e.gold_text;
        if (!e.scores.empty()) j["scores"] = e.scores;
        if (e.completion) j["completion"] = *e.completion;
        if (e.confidence) j["confidence"] = *e.confidence;
        entries_json.push_back(std::move(j));
    }
    Json rw = Json::array();
    for (const auto& [from, to] : rewrites) {
        rw.push_back({{"from", from}, {"to", to}});
    }
    return {{"score_mode", score_mode == MockScoreMode::Oracle ? "oracle" : "hash"},
            {"entries", entries_json},
            {"rewrites", rw},
            {"embed_dim", embed_dim},
            {"vectors", vectors},
            {"infill_pool", infill_pool}};
}

MockBackend::MockBackend(MockScript script) : script_(std::move(script)) {}

const MockEntry* MockBackend::match(const std::string& prompt) const
{
    const MockEntry* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& e : script_.entries) {
        std::size_t len = 0;
        bool all = !e.segments.empty();
        for (const auto& s : e.segments) {
            if (prompt.find(s) == std::string::npos) {
                all = false;
                break;
            }
            len += s.size();
        }
        if (all && (best == nullptr || len > best_len)) {
            best = &e;
            best_len = len;
        }
    }
    return best;
}

ScoreResponse MockBackend::score(const ScoreRequest& request)
{
    ++calls_[static_cast<int>(Role::Score)];
    const MockEntry* entry = match(request.prompt_text);
    ScoreResponse out;
    for (const auto& choice : request.choices) {
        double ll;
        if (entry && !entry->scores.empty()) {
            auto it = entry->scores.find(choice);
            ll = it == entry->scores.end() ? -20.0 : it->second;
        } else if (script_.score_mode == MockScoreMode::Oracle && entry && entry->gold_label) {
            ll = choice == *entry->gold_label ? 0.0 : -10.0;
        } else {
            ll = -static_cast<double>(stable_hash(request.prompt_text + '\x1f' + choice) % 100000) / 10000.0;
        }
        out.scores.push_back({choice, ll, token_count(choice)});
    }
    return out;
}

GenerateResponse MockBackend::generate(const GenerateRequest& request)
{
    ++calls_[static_cast<int>(Role::Generate)];
    const auto& prompt = request.prompt_text;
    GenerateResponse out;
    std::optional<double> confidence;
    if (prompt.find("<extra_id_0>") != std::string::npos) {
        auto pool = text::codepoints(script_.infill_pool);
        for (int k = 0;; ++k) {
            std::string sentinel = "<extra_id_" + std::to_string(k) + ">";
            if (prompt.find(sentinel) == std::string::npos) {
                break;
            }
            out.completion_text += sentinel;
            out.completion_text += pool[stable_hash(prompt, static_cast<std::uint64_t>(k)) % pool.size()];
        }
    } else if (const MockEntry* entry = match(prompt)) {
        out.completion_text = entry->completion.value_or(entry->gold_text.value_or(""));
        confidence = entry->confidence;
    } else {
        auto nl = prompt.rfind('\n');
        out.completion_text = nl == std::string::npos ? prompt : prompt.substr(nl + 1);
    }
    auto tokens = text::codepoints(out.completion_text);
    std::size_t n = std::max<std::size_t>(1, tokens.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (confidence) {
            out.token_logprobs.push_back(std::log(std::clamp(*confidence, 1e-12, 1.0)));
        } else {
            out.token_logprobs.push_back(-static_cast<double>(stable_hash(prompt, i + 1) % 1000) / 1000.0);
        }
    }
    return out;
}

TranslateResponse MockBackend::translate(const TranslateRequest& request)
{
    ++calls_[static_cast<int>(Role::Translate)];
    std::string text = request.text;
    for (const auto& [from, to] : script_.rewrites) {
        text::replace_all(text, from, to);
    }
    return {text};
}

EmbedResponse MockBackend::embed(const EmbedRequest& request)
{
    ++calls_[static_cast<int>(Role::Embed)];
    EmbedResponse out;
    out.dim = script_.embed_dim;
    for (const auto& t : request.texts) {
        if (auto it = script_.vectors.find(t); it != script_.vectors.end()) {
            if (it->second.size() != out.dim) {
                throw ProtocolError("scripted vector for '" + t + "' has wrong dimension");
            }
            out.vectors.push_back(it->second);
            continue;
        }
        std::vector<double> v(out.dim, 0.0);
        auto cps = text::tokenize(t, text::TokenUnit::Char);
        for (std::size_t i = 0; i < cps.size(); ++i) {
            v[stable_hash(cps[i]) % out.dim] += 1.0;
            if (i + 1 < cps.size()) {
                v[stable_hash(cps[i] + cps[i + 1], 7) % out.dim] += 0.5;
            }
        }
        out.vectors.push_back(std::move(v));
    }
    return out;
}

std::int64_t MockBackend::refresh()
{
    return ++version_;
}

struct MockServer::Impl {
    httplib::Server server;
};

MockServer::MockServer(std::shared_ptr<MockBackend> backend, FaultPlan faults)
    : impl_(std::make_unique<Impl>()), backend_(std::move(backend)), faults_(std::move(faults))
{
    auto& svr = impl_->server;

    auto handle = [this](int role_slot, std::function<Json(const Json&)> fn) {
        return [this, role_slot, fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
            ++hits_[role_slot];
            const std::string key = std::to_string(role_slot) + "|" + req.body;
            bool fault = false;
            if (faults_.always || faults_.timeout_attempts > 0) {
                if (faults_.match.empty() || req.body.find(faults_.match) != std::string::npos) {
                    std::lock_guard lock(mutex_);
                    int n = ++attempts_[key];
                    fault = faults_.always || n <= faults_.timeout_attempts;
                }
            }
            if (fault) {
                std::this_thread::sleep_for(faults_.delay);
                res.status = 503;
                res.set_content(R"({"error":"injected timeout"})", "application/json");
                return;
            }
            Json body;
            try {
                body = Json::parse(req.body);
                Json out = fn(body);
                {
                    std::lock_guard lock(mutex_);
                    ++served_[req.body];
                }
                res.set_content(out.dump(), "application/json");
            } catch (const Json::parse_error& e) {
                res.status = 400;
                res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
            } catch (const ProtocolError& e) {
                res.status = 400;
                res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 500;
                res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
            }
        };
    };

    svr.Post("/v1/score", handle(0, [this](const Json& j) {
        return encode(backend_->score(decode_score_request(j)));
    }));
    svr.Post("/v1/generate", handle(1, [this](const Json& j) {
        return encode(backend_->generate(decode_generate_request(j)));
    }));
    svr.Post("/v1/translate", handle(2, [this](const Json& j) {
        return encode(backend_->translate(decode_translate_request(j)));
    }));
    svr.Post("/v1/embed", handle(3, [this](const Json& j) {
        return encode(backend_->embed(decode_embed_request(j)));
    }));
    svr.Post("/v1/refresh", handle(4, [this](const Json& j) {
        if (!j.is_object()) {
            throw ProtocolError("refresh body must be an object");
        }
        return encode(RefreshResponse{backend_->refresh()});
    }));

    port_ = svr.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) {
        throw BackendError("mock server could not bind a loopback port");
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    svr.wait_until_ready();
}

MockServer::~MockServer()
{
    impl_->server.stop();
    if (thread_.joinable()) {
        thread_.join();
    }
}

std::string MockServer::base_url() const
{
    return "http://127.0.0.1:" + std::to_string(port_);
}

std::map<std::string, std::size_t> MockServer::served() const
{
    std::lock_guard lock(mutex_);
    return served_;
}

BackendEndpoint MockServer::endpoint(Role role, std::chrono::milliseconds timeout, std::size_t max_in_flight) const
{
    BackendEndpoint e;
    e.base_url = base_url();
    e.role = role;
    e.timeout = timeout;
    e.max_in_flight = max_in_flight;
    e.backoff = std::chrono::milliseconds(10);
    return e;
}

} // namespace zsp::protocol
