// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <string_view>

#include "zsp/protocol.hpp"

namespace zsp::protocol {

/// JSON-over-HTTP POST with bounded retries. Transport failures, timeouts,
/// and 5xx replies are retried with exponential backoff; 4xx replies and
/// malformed bodies fail immediately.
class HttpTransport {
public:
    explicit HttpTransport(BackendEndpoint endpoint);

    Json post(std::string_view path, const Json& body) const;

    const BackendEndpoint& endpoint() const { return endpoint_; }
    /// Total HTTP attempts made so far, including retries.
    std::size_t attempts() const { return attempts_.load(); }

private:
    BackendEndpoint endpoint_;
    std::string host_;     // scheme://host:port
    std::string prefix_;   // path prefix from base_url, no trailing slash
    mutable std::atomic<std::size_t> attempts_{0};
};

class HttpScoreClient : public ScoreClient {
public:
    explicit HttpScoreClient(BackendEndpoint endpoint);
    ScoreResponse score(const ScoreRequest& request) override;
    const HttpTransport& transport() const { return transport_; }

private:
    HttpTransport transport_;
};

class HttpGenerateClient : public GenerateClient {
public:
    explicit HttpGenerateClient(BackendEndpoint endpoint);
    GenerateResponse generate(const GenerateRequest& request) override;
    const HttpTransport& transport() const { return transport_; }

private:
    HttpTransport transport_;
};

class HttpTranslateClient : public TranslateClient {
public:
    explicit HttpTranslateClient(BackendEndpoint endpoint);
    TranslateResponse translate(const TranslateRequest& request) override;

private:
    HttpTransport transport_;
};

class HttpEmbedClient : public EmbedClient {
public:
    explicit HttpEmbedClient(BackendEndpoint endpoint);
    EmbedResponse embed(const EmbedRequest& request) override;

private:
    HttpTransport transport_;
};

/// Posts to /v1/refresh on a score endpoint.
class HttpRefreshClient : public RefreshClient {
public:
    explicit HttpRefreshClient(BackendEndpoint endpoint);
    std::int64_t refresh() override;

private:
    HttpTransport transport_;
};

} // namespace zsp::protocol
