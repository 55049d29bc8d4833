// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "zsp/protocol.hpp"

namespace zsp::protocol {

/// A scripted example the mock recognizes when all of its segments occur in
/// a prompt. Scores override the score-mode behavior for that prompt.
struct MockEntry {
    std::vector<std::string> segments;
    std::optional<std::string> gold_label;
    std::optional<std::string> gold_text;
    std::map<std::string, double> scores;
    std::optional<std::string> completion;
    std::optional<double> confidence;  // per-token probability of the completion
};

enum class MockScoreMode { Hash, Oracle };

struct MockScript {
    MockScoreMode score_mode = MockScoreMode::Hash;
    std::vector<MockEntry> entries;
    std::vector<std::pair<std::string, std::string>> rewrites;  // translate: substring replacements
    std::size_t embed_dim = 16;
    std::map<std::string, std::vector<double>> vectors;         // scripted embeddings by text
    std::string infill_pool = "请问这句话的意思是什么回答内容文本判断";

    static MockScript from_json(const Json& j);
    Json to_json() const;
};

/// Deterministic in-process implementation of every backend role. All
/// behavior is a pure function of the script and the request, so results
/// never depend on call order or concurrency.
///
///   score     scripted scores if an entry matches; oracle mode gives the
///             entry's gold choice 0 and every other choice -10; otherwise a
///             hash of (prompt, choice) in (-10, 0].
///   generate  "<extra_id_k>" sentinels get hashed fills from infill_pool;
///             a matching entry yields its completion or gold text;
///             anything else echoes the prompt's last line.
///   translate applies the rewrites in order.
///   embed     scripted vector, else hashed character/bigram counts.
///   refresh   increments the model version.
class MockBackend : public ScoreClient,
                    public GenerateClient,
                    public TranslateClient,
                    public EmbedClient,
                    public RefreshClient {
public:
    explicit MockBackend(MockScript script = {});

    ScoreResponse score(const ScoreRequest& request) override;
    GenerateResponse generate(const GenerateRequest& request) override;
    TranslateResponse translate(const TranslateRequest& request) override;
    EmbedResponse embed(const EmbedRequest& request) override;
    std::int64_t refresh() override;

    std::size_t calls(Role role) const { return calls_[static_cast<int>(role)].load(); }
    std::int64_t model_version() const { return version_.load(); }
    const MockScript& script() const { return script_; }

private:
    const MockEntry* match(const std::string& prompt) const;

    MockScript script_;
    std::atomic<std::size_t> calls_[4] = {};
    std::atomic<std::int64_t> version_{0};
};

/// Delays matching requests past the client's timeout. With `always`, every
/// attempt is delayed; otherwise only the first `timeout_attempts` attempts
/// of each distinct request body.
struct FaultPlan {
    int timeout_attempts = 0;
    bool always = false;
    std::chrono::milliseconds delay{0};
    std::string match;  // substring of the request body; empty matches all
};

/// Serves a MockBackend over HTTP on 127.0.0.1 with an ephemeral port.
class MockServer {
public:
    explicit MockServer(std::shared_ptr<MockBackend> backend, FaultPlan faults = {});
    ~MockServer();
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    std::string base_url() const;
    int port() const { return port_; }

    /// Requests received per role, including faulted attempts.
    std::size_t hits(Role role) const { return hits_[static_cast<int>(role)].load(); }
    /// Requests answered without an injected fault, per distinct body.
    std::map<std::string, std::size_t> served() const;

    BackendEndpoint endpoint(Role role, std::chrono::milliseconds timeout = std::chrono::milliseconds(5000),
                             std::size_t max_in_flight = 4) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::shared_ptr<MockBackend> backend_;
    FaultPlan faults_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<std::size_t> hits_[5] = {};
    mutable std::mutex mutex_;
    std::map<std::string, int> attempts_;
    std::map<std::string, std::size_t> served_;
};

} // namespace zsp::protocol
