// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "zsp/error.hpp"
#include "zsp/jsonl.hpp"

// Backend wire protocol: one JSON object per HTTP POST, one route per role.
//   POST /v1/score     {prompt_text, mask_offset, choices[], soft_slot_len}
//                   -> {scores: [{choice, log_likelihood, token_count}]}
//   POST /v1/generate  {prompt_text, max_new_tokens, temperature}
//                   -> {completion_text, token_logprobs?[]}
//   POST /v1/translate {text, source, target} -> {text}
//   POST /v1/embed     {texts[]} -> {vectors[][], dim}
//   POST /v1/refresh   {} -> {model_version}
namespace zsp::protocol {

/// Malformed request or response body.
class ProtocolError : public BackendError {
public:
    using BackendError::BackendError;
};

enum class Role { Score, Generate, Translate, Embed };

Role parse_role(std::string_view s);
std::string_view to_string(Role r);
std::string_view route(Role r);

struct BackendEndpoint {
    std::string base_url;
    Role role = Role::Score;
    std::chrono::milliseconds timeout{30000};
    std::size_t max_in_flight = 4;
    int max_attempts = 3;
    std::chrono::milliseconds backoff{100};  // doubled after every failed attempt

    void validate() const;
};

struct ScoreRequest {
    std::string prompt_text;
    std::size_t mask_offset = 0;
    std::vector<std::string> choices;
    int soft_slot_len = 0;
};

struct ChoiceLikelihood {
    std::string choice;
    double log_likelihood = 0.0;
    int token_count = 1;
};

struct ScoreResponse {
    std::vector<ChoiceLikelihood> scores;
};

struct GenerateRequest {
    std::string prompt_text;
    int max_new_tokens = 64;
    double temperature = 0.0;
};

struct GenerateResponse {
    std::string completion_text;
    std::vector<double> token_logprobs;  // optional on the wire
};

struct TranslateRequest {
    std::string text;
    std::string source;
    std::string target;
};

struct TranslateResponse {
    std::string text;
};

struct EmbedRequest {
    std::vector<std::string> texts;
};

struct EmbedResponse {
    std::vector<std::vector<double>> vectors;
    std::size_t dim = 0;
};

struct RefreshResponse {
    std::int64_t model_version = 0;
};

Json encode(const ScoreRequest& m);
Json encode(const ScoreResponse& m);
Json encode(const GenerateRequest& m);
Json encode(const GenerateResponse& m);
Json encode(const TranslateRequest& m);
Json encode(const TranslateResponse& m);
Json encode(const EmbedRequest& m);
Json encode(const EmbedResponse& m);
Json encode(const RefreshResponse& m);

// Decoders validate the schema and throw ProtocolError naming the field.
ScoreRequest decode_score_request(const Json& j);
ScoreResponse decode_score_response(const Json& j);
GenerateRequest decode_generate_request(const Json& j);
GenerateResponse decode_generate_response(const Json& j);
TranslateRequest decode_translate_request(const Json& j);
TranslateResponse decode_translate_response(const Json& j);
EmbedRequest decode_embed_request(const Json& j);
EmbedResponse decode_embed_response(const Json& j);
RefreshResponse decode_refresh_response(const Json& j);

/// Checks that a score response answers exactly the requested choices and
/// returns the entries reordered to match the request.
std::vector<ChoiceLikelihood> match_choices(const ScoreRequest& request, const ScoreResponse& response);

/// Checks vector count and dimensions of an embed response.
void check_embed_response(const EmbedRequest& request, const EmbedResponse& response);

class ScoreClient {
public:
    virtual ~ScoreClient() = default;
    virtual ScoreResponse score(const ScoreRequest& request) = 0;
};

class GenerateClient {
public:
    virtual ~GenerateClient() = default;
    virtual GenerateResponse generate(const GenerateRequest& request) = 0;
};

class TranslateClient {
public:
    virtual ~TranslateClient() = default;
    virtual TranslateResponse translate(const TranslateRequest& request) = 0;
};

class EmbedClient {
public:
    virtual ~EmbedClient() = default;
    virtual EmbedResponse embed(const EmbedRequest& request) = 0;
};

/// Opaque "the model was retrained" signal between self-training epochs.
class RefreshClient {
public:
    virtual ~RefreshClient() = default;
    virtual std::int64_t refresh() = 0;
};

} // namespace zsp::protocol
