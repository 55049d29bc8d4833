// SPDX-License-Identifier: Apache-2.0

#include "zsp/protocol.hpp"

#include <cmath>
#include <unordered_map>

namespace zsp::protocol {

namespace {

const Json& field(const Json& j, const char* name)
{
    if (!j.is_object()) {
        throw ProtocolError("message is not a JSON object");
    }
    auto it = j.find(name);
    if (it == j.end()) {
        throw ProtocolError(std::string("missing field '") + name + "'");
    }
    return *it;
}

std::string get_string(const Json& j, const char* name)
{
    const auto& v = field(j, name);
    if (!v.is_string()) {
        throw ProtocolError(std::string("field '") + name + "' must be a string");
    }
    return v.get<std::string>();
}

double get_finite(const Json& v, const std::string& name)
{
    if (!v.is_number()) {
        throw ProtocolError("field '" + name + "' must be a number");
    }
    double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ProtocolError("field '" + name + "' must be finite");
    }
    return d;
}

std::int64_t get_int(const Json& j, const char* name, std::int64_t min_value)
{
    const auto& v = field(j, name);
    if (!v.is_number_integer()) {
        throw ProtocolError(std::string("field '") + name + "' must be an integer");
    }
    auto n = v.get<std::int64_t>();
    if (n < min_value) {
        throw ProtocolError(std::string("field '") + name + "' must be >= " + std::to_string(min_value));
    }
    return n;
}

std::vector<std::string> get_strings(const Json& j, const char* name)
{
    const auto& v = field(j, name);
    if (!v.is_array()) {
        throw ProtocolError(std::string("field '") + name + "' must be an array");
    }
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) {
            throw ProtocolError(std::string("field '") + name + "' must hold strings");
        }
        out.push_back(e.get<std::string>());
    }
    return out;
}

} // namespace

Role parse_role(std::string_view s)
{
    if (s == "score") return Role::Score;
    if (s == "generate") return Role::Generate;
    if (s == "translate") return Role::Translate;
    if (s == "embed") return Role::Embed;
    throw ConfigError("unknown backend role '" + std::string(s) + "'");
}

std::string_view to_string(Role r)
{
    switch (r) {
    case Role::Score: return "score";
    case Role::Generate: return "generate";
    case Role::Translate: return "translate";
    case Role::Embed: return "embed";
    }
    return "?";
}

std::string_view route(Role r)
{
    switch (r) {
    case Role::Score: return "/v1/score";
    case Role::Generate: return "/v1/generate";
    case Role::Translate: return "/v1/translate";
    case Role::Embed: return "/v1/embed";
    }
    return "/";
}

void BackendEndpoint::validate() const
{
    if (base_url.empty()) {
        throw ConfigError(std::string(to_string(role)) + " endpoint: empty base_url");
    }
    if (max_in_flight < 1) {
        throw ConfigError(std::string(to_string(role)) + " endpoint: max_in_flight must be >= 1");
    }
    if (max_attempts < 1) {
        throw ConfigError(std::string(to_string(role)) + " endpoint: max_attempts must be >= 1");
    }
    if (timeout.count() <= 0) {
        throw ConfigError(std::string(to_string(role)) + " endpoint: timeout must be positive");
    }
}

Json encode(const ScoreRequest& m)
{
    return {{"prompt_text", m.prompt_text}, {"mask_offset", m.mask_offset},
            {"choices", m.choices}, {"soft_slot_len", m.soft_slot_len}};
}

Json encode(const ScoreResponse& m)
{
    Json scores = Json::array();
    for (const auto& s : m.scores) {
        scores.push_back({{"choice", s.choice}, {"log_likelihood", s.log_likelihood}, {"token_count", s.token_count}});
    }
    return {{"scores", scores}};
}

Json encode(const GenerateRequest& m)
{
    return {{"prompt_text", m.prompt_text}, {"max_new_tokens", m.max_new_tokens}, {"temperature", m.temperature}};
}

Json encode(const GenerateResponse& m)
{
    Json j = {{"completion_text", m.completion_text}};
    if (!m.token_logprobs.empty()) {
        j["token_logprobs"] = m.token_logprobs;
    }
    return j;
}

Json encode(const TranslateRequest& m)
{
    return {{"text", m.text}, {"source", m.source}, {"target", m.target}};
}

Json encode(const TranslateResponse& m) { return {{"text", m.text}}; }

Json encode(const EmbedRequest& m) { return {{"texts", m.texts}}; }

Json encode(const EmbedResponse& m) { return {{"vectors", m.vectors}, {"dim", m.dim}}; }

Json encode(const RefreshResponse& m) { return {{"model_version", m.model_version}}; }

ScoreRequest decode_score_request(const Json& j)
{
    ScoreRequest m;
    m.prompt_text = get_string(j, "prompt_text");
    m.mask_offset = static_cast<std::size_t>(get_int(j, "mask_offset", 0));
    m.choices = get_strings(j, "choices");
    m.soft_slot_len = static_cast<int>(get_int(j, "soft_slot_len", 0));
    if (m.choices.empty()) {
        throw ProtocolError("field 'choices' must not be empty");
    }
    if (m.mask_offset > m.prompt_text.size()) {
        throw ProtocolError("field 'mask_offset' lies outside prompt_text");
    }
    return m;
}

ScoreResponse decode_score_response(const Json& j)
{
    const auto& arr = field(j, "scores");
    if (!arr.is_array()) {
        throw ProtocolError("field 'scores' must be an array");
    }
    ScoreResponse m;
    for (const auto& e : arr) {
        ChoiceLikelihood c;
        c.choice = get_string(e, "choice");
        c.log_likelihood = get_finite(field(e, "log_likelihood"), "log_likelihood");
        c.token_count = static_cast<int>(get_int(e, "token_count", 1));
        m.scores.push_back(std::move(c));
    }
    return m;
}

GenerateRequest decode_generate_request(const Json& j)
{
    GenerateRequest m;
    m.prompt_text = get_string(j, "prompt_text");
    m.max_new_tokens = static_cast<int>(get_int(j, "max_new_tokens", 1));
    m.temperature = get_finite(field(j, "temperature"), "temperature");
    if (m.temperature != 0.0) {
        throw ProtocolError("field 'temperature' must be 0 (greedy decoding)");
    }
    return m;
}

GenerateResponse decode_generate_response(const Json& j)
{
    GenerateResponse m;
    m.completion_text = get_string(j, "completion_text");
    if (auto it = j.find("token_logprobs"); it != j.end()) {
        if (!it->is_array()) {
            throw ProtocolError("field 'token_logprobs' must be an array");
        }
        for (const auto& v : *it) {
            double lp = get_finite(v, "token_logprobs");
            if (lp > 0.0) {
                throw ProtocolError("field 'token_logprobs' holds a positive log-probability");
            }
            m.token_logprobs.push_back(lp);
        }
    }
    return m;
}

TranslateRequest decode_translate_request(const Json& j)
{
    TranslateRequest m;
    m.text = get_string(j, "text");
    m.source = get_string(j, "source");
    m.target = get_string(j, "target");
    return m;
}

TranslateResponse decode_translate_response(const Json& j)
{
    return {get_string(j, "text")};
}

EmbedRequest decode_embed_request(const Json& j)
{
    EmbedRequest m;
    m.texts = get_strings(j, "texts");
    return m;
}

EmbedResponse decode_embed_response(const Json& j)
{
    EmbedResponse m;
    m.dim = static_cast<std::size_t>(get_int(j, "dim", 1));
    const auto& arr = field(j, "vectors");
    if (!arr.is_array()) {
        throw ProtocolError("field 'vectors' must be an array");
    }
    for (const auto& row : arr) {
        if (!row.is_array()) {
            throw ProtocolError("field 'vectors' must hold arrays");
        }
        std::vector<double> v;
        for (const auto& x : row) {
            v.push_back(get_finite(x, "vectors"));
        }
        if (v.size() != m.dim) {
            throw ProtocolError("embedding of length " + std::to_string(v.size()) + " does not match dim " +
                                std::to_string(m.dim));
        }
        m.vectors.push_back(std::move(v));
    }
    return m;
}

RefreshResponse decode_refresh_response(const Json& j)
{
    return {get_int(j, "model_version", 0)};
}

std::vector<ChoiceLikelihood> match_choices(const ScoreRequest& request, const ScoreResponse& response)
{
    if (response.scores.size() != request.choices.size()) {
        throw ProtocolError("score response has " + std::to_string(response.scores.size()) +
                            " entries for " + std::to_string(request.choices.size()) + " choices");
    }
    std::unordered_map<std::string, const ChoiceLikelihood*> by_choice;
    for (const auto& s : response.scores) {
        if (!by_choice.emplace(s.choice, &s).second) {
            throw ProtocolError("score response repeats choice '" + s.choice + "'");
        }
    }
    std::vector<ChoiceLikelihood> out;
    for (const auto& c : request.choices) {
        auto it = by_choice.find(c);
        if (it == by_choice.end()) {
            throw ProtocolError("score response lacks choice '" + c + "'");
        }
        out.push_back(*it->second);
    }
    return out;
}

void check_embed_response(const EmbedRequest& request, const EmbedResponse& response)
{
    if (response.vectors.size() != request.texts.size()) {
        throw ProtocolError("embed response has " + std::to_string(response.vectors.size()) +
                            " vectors for " + std::to_string(request.texts.size()) + " texts");
    }
}

} // namespace zsp::protocol
