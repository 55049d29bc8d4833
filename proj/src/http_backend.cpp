// SPDX-License-Identifier: Apache-2.0

#include "zsp/http_backend.hpp"

#include <thread>

#include <httplib.h>

namespace zsp::protocol {

namespace {

void require_role(const BackendEndpoint& e, Role want)
{
    if (e.role != want) {
        throw ConfigError("endpoint " + e.base_url + " has role " + std::string(to_string(e.role)) +
                          ", expected " + std::string(to_string(want)));
    }
}

} // namespace

HttpTransport::HttpTransport(BackendEndpoint endpoint) : endpoint_(std::move(endpoint))
{
    endpoint_.validate();
    const auto& url = endpoint_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("base_url must look like http://host:port, got '" + url + "'");
    }
    auto path_start = url.find('/', scheme_end + 3);
    host_ = url.substr(0, path_start);
    if (path_start != std::string::npos) {
        prefix_ = url.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') {
            prefix_.pop_back();
        }
    }
}

Json HttpTransport::post(std::string_view path, const Json& body) const
{
    const std::string target = prefix_ + std::string(path);
    const std::string payload = body.dump();
    const auto timeout = endpoint_.timeout;
    auto delay = endpoint_.backoff;
    std::string last_error;

    for (int attempt = 1; attempt <= endpoint_.max_attempts; ++attempt) {
        ++attempts_;
        httplib::Client cli(host_);
        cli.set_connection_timeout(timeout);
        cli.set_read_timeout(timeout);
        cli.set_write_timeout(timeout);
        auto res = cli.Post(target, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
        } else if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
        } else if (res->status >= 400) {
            throw ProtocolError(endpoint_.base_url + target + " rejected request: HTTP " +
                                std::to_string(res->status) + " " + res->body);
        } else {
            try {
                return Json::parse(res->body);
            } catch (const Json::parse_error& e) {
                throw ProtocolError(endpoint_.base_url + target + " returned malformed JSON: " + e.what());
            }
        }
        if (attempt < endpoint_.max_attempts) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
    throw BackendError(std::string(to_string(endpoint_.role)) + " backend " + endpoint_.base_url + target +
                       " failed after " + std::to_string(endpoint_.max_attempts) + " attempts: " + last_error);
}

HttpScoreClient::HttpScoreClient(BackendEndpoint endpoint) : transport_((require_role(endpoint, Role::Score), endpoint)) {}

ScoreResponse HttpScoreClient::score(const ScoreRequest& request)
{
    return decode_score_response(transport_.post(route(Role::Score), encode(request)));
}

HttpGenerateClient::HttpGenerateClient(BackendEndpoint endpoint)
    : transport_((require_role(endpoint, Role::Generate), endpoint))
{
}

GenerateResponse HttpGenerateClient::generate(const GenerateRequest& request)
{
    return decode_generate_response(transport_.post(route(Role::Generate), encode(request)));
}

HttpTranslateClient::HttpTranslateClient(BackendEndpoint endpoint)
    : transport_((require_role(endpoint, Role::Translate), endpoint))
{
}

TranslateResponse HttpTranslateClient::translate(const TranslateRequest& request)
{
    return decode_translate_response(transport_.post(route(Role::Translate), encode(request)));
}

HttpEmbedClient::HttpEmbedClient(BackendEndpoint endpoint) : transport_((require_role(endpoint, Role::Embed), endpoint)) {}

EmbedResponse HttpEmbedClient::embed(const EmbedRequest& request)
{
    auto response = decode_embed_response(transport_.post(route(Role::Embed), encode(request)));
    check_embed_response(request, response);
    return response;
}

HttpRefreshClient::HttpRefreshClient(BackendEndpoint endpoint) : transport_((require_role(endpoint, Role::Score), endpoint)) {}

std::int64_t HttpRefreshClient::refresh()
{
    return decode_refresh_response(transport_.post("/v1/refresh", Json::object())).model_version;
}

} // namespace zsp::protocol
