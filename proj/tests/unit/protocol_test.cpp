// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <chrono>

#include "support.hpp"
#include "zsp/http_backend.hpp"
#include "zsp/mock_backend.hpp"
#include "zsp/scoring.hpp"

using namespace zsp;
using namespace zsp::protocol;
using namespace std::chrono_literals;

TEST(Messages, RoundTripEveryRole)
{
    ScoreRequest sr{"文本[MASK]", 6, {"是", "否"}, 4};
    auto sr2 = decode_score_request(encode(sr));
    EXPECT_EQ(sr2.prompt_text, sr.prompt_text);
    EXPECT_EQ(sr2.mask_offset, 6u);
    EXPECT_EQ(sr2.choices, sr.choices);
    EXPECT_EQ(sr2.soft_slot_len, 4);

    ScoreResponse resp{{{"是", -0.5, 1}, {"否", -2.0, 1}}};
    auto resp2 = decode_score_response(encode(resp));
    ASSERT_EQ(resp2.scores.size(), 2u);
    EXPECT_EQ(resp2.scores[1].log_likelihood, -2.0);

    auto g = decode_generate_response(encode(GenerateResponse{"abc", {-0.1, -0.2}}));
    EXPECT_EQ(g.completion_text, "abc");
    EXPECT_EQ(g.token_logprobs.size(), 2u);
    EXPECT_EQ(decode_translate_response(encode(TranslateResponse{"hello"})).text, "hello");
    auto e = decode_embed_response(encode(EmbedResponse{{{1, 2}, {3, 4}}, 2}));
    EXPECT_EQ(e.vectors[1][0], 3.0);
    EXPECT_EQ(decode_refresh_response(encode(RefreshResponse{7})).model_version, 7);
}

TEST(Messages, SchemaViolationsRejected)
{
    EXPECT_THROW(decode_score_request(Json{{"prompt_text", "x"}}), ProtocolError);
    EXPECT_THROW(decode_generate_request(Json{{"prompt_text", "x"}, {"max_new_tokens", 5}, {"temperature", 0.7}}),
                 ProtocolError);
    EXPECT_THROW(decode_generate_response(Json{{"completion_text", "x"}, {"token_logprobs", {0.5}}}), ProtocolError);
    EXPECT_THROW(decode_score_response(Json{{"scores", {{{"choice", "a"}, {"log_likelihood", "high"}}}}}),
                 ProtocolError);
    EXPECT_THROW(decode_embed_response(Json{{"vectors", {{1, 2}}}, {"dim", 3}}), ProtocolError);
}

TEST(Messages, MatchChoicesReordersAndValidates)
{
    ScoreRequest req{"p", 0, {"a", "b"}, 0};
    auto m = match_choices(req, ScoreResponse{{{"b", -1, 1}, {"a", -2, 1}}});
    EXPECT_EQ(m[0].choice, "a");
    EXPECT_EQ(m[1].choice, "b");
    EXPECT_THROW(match_choices(req, ScoreResponse{{{"a", -1, 1}}}), ProtocolError);
    EXPECT_THROW(match_choices(req, ScoreResponse{{{"a", -1, 1}, {"c", -1, 1}}}), ProtocolError);
}

TEST(Endpoint, Validation)
{
    BackendEndpoint e;
    e.base_url = "http://127.0.0.1:1";
    EXPECT_NO_THROW(e.validate());
    e.max_attempts = 0;
    EXPECT_THROW(e.validate(), ConfigError);
    EXPECT_THROW(parse_role("rerank"), ConfigError);
    BackendEndpoint gen;
    gen.base_url = "http://127.0.0.1:1";
    gen.role = Role::Generate;
    EXPECT_THROW(HttpScoreClient{gen}, ConfigError);
}

TEST(Http, AllRolesRoundTripThroughMockServer)
{
    MockScript script;
    script.rewrites = {{"hello", "bonjour"}};
    script.embed_dim = 4;
    script.entries.push_back({{"输入"}, std::nullopt, "目标", {{"是", -0.25}}, std::nullopt, std::nullopt});
    auto backend = std::make_shared<MockBackend>(script);
    MockServer server(backend);

    HttpScoreClient score(server.endpoint(Role::Score));
    auto s = score.score({"输入[MASK]", 6, {"是", "否"}, 0});
    ASSERT_EQ(s.scores.size(), 2u);
    EXPECT_EQ(s.scores[0].log_likelihood, -0.25);
    EXPECT_EQ(s.scores[1].log_likelihood, -20.0);

    HttpGenerateClient gen(server.endpoint(Role::Generate));
    auto g = gen.generate({"输入", 16, 0.0});
    EXPECT_EQ(g.completion_text, "目标");
    EXPECT_EQ(g.token_logprobs.size(), 2u);

    HttpTranslateClient tr(server.endpoint(Role::Translate));
    EXPECT_EQ(tr.translate({"hello world", "en", "fr"}).text, "bonjour world");

    HttpEmbedClient emb(server.endpoint(Role::Embed));
    auto e = emb.embed({{"abc", "de"}});
    EXPECT_EQ(e.dim, 4u);
    ASSERT_EQ(e.vectors.size(), 2u);
    EXPECT_EQ(e.vectors[0].size(), 4u);

    HttpRefreshClient refresh(server.endpoint(Role::Score));
    EXPECT_EQ(refresh.refresh(), 1);

    EXPECT_EQ(server.hits(Role::Score), 1u);
    EXPECT_EQ(server.hits(Role::Generate), 1u);
    EXPECT_EQ(server.hits(Role::Translate), 1u);
    EXPECT_EQ(server.hits(Role::Embed), 1u);
    // In-process calls give identical answers.
    EXPECT_EQ(backend->translate({"hello", "en", "fr"}).text, "bonjour");
}

TEST(Http, TransientFailuresAreRetried)
{
    auto backend = std::make_shared<MockBackend>();
    FaultPlan faults;
    faults.timeout_attempts = 2;
    MockServer server(backend, faults);
    HttpTranslateClient tr(server.endpoint(Role::Translate));
    EXPECT_EQ(tr.translate({"x", "en", "zh"}).text, "x");
    EXPECT_EQ(server.hits(Role::Translate), 3u);
}

TEST(Http, RealTimeoutsAreRetriedThenFail)
{
    auto backend = std::make_shared<MockBackend>();
    FaultPlan faults;
    faults.always = true;
    faults.delay = 400ms;
    MockServer server(backend, faults);
    HttpTranslateClient tr(server.endpoint(Role::Translate, 100ms));
    auto start = std::chrono::steady_clock::now();
    try {
        tr.translate({"x", "en", "zh"});
        FAIL() << "expected failure";
    } catch (const ProtocolError&) {
        FAIL() << "transport failure must not be reported as a protocol error";
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("after 3 attempts"), std::string::npos) << e.what();
    }
    EXPECT_LT(std::chrono::steady_clock::now() - start, 5s);
    EXPECT_EQ(server.hits(Role::Translate), 3u);
    EXPECT_TRUE(server.served().empty());
}

TEST(Http, ClientErrorsAreNotRetried)
{
    auto backend = std::make_shared<MockBackend>();
    MockServer server(backend);
    HttpTransport transport(server.endpoint(Role::Generate));
    Json bad{{"prompt_text", "x"}, {"max_new_tokens", 4}, {"temperature", 0.9}};
    EXPECT_THROW(transport.post("/v1/generate", bad), ProtocolError);
    EXPECT_EQ(transport.attempts(), 1u);
    EXPECT_EQ(server.hits(Role::Generate), 1u);
}

TEST(Http, UnreachableBackendFailsAfterThreeAttempts)
{
    int port;
    {
        MockServer probe(std::make_shared<MockBackend>());
        port = probe.port();
    }
    BackendEndpoint e;
    e.base_url = "http://127.0.0.1:" + std::to_string(port);
    e.role = Role::Score;
    e.timeout = 200ms;
    e.backoff = 5ms;
    HttpScoreClient client(e);
    EXPECT_THROW(client.score({"p[MASK]", 1, {"a", "b"}, 0}), BackendError);
    EXPECT_EQ(client.transport().attempts(), 3u);
}

TEST(Http, RetriesNeverDuplicateAnExamplesContribution)
{
    auto task = zsp::testing::classification_task("bin", {"否", "是"}, MetricKind::Auc);
    std::vector<LabeledExample> dev;
    MockScript script;
    for (int i = 0; i < 12; ++i) {
        dev.push_back(zsp::testing::labeled(std::to_string(i), "样本" + std::to_string(i) + "号", i % 2 ? "是" : "否"));
    }
    auto backend = std::make_shared<MockBackend>(script);
    PromptTemplate t;
    t.description = "[X]对吗[MASK]";
    t.verbalizers = {"否", "是"};

    double clean = score_prompt(t, task, dev, {backend.get(), nullptr});

    FaultPlan faults;
    faults.timeout_attempts = 2;
    faults.delay = 150ms;
    MockServer server(backend, faults);
    HttpScoreClient client(server.endpoint(Role::Score, 60ms));
    ScoringOptions opts;
    opts.max_in_flight = 4;
    auto ev = evaluate_prompt(t, task, dev, {&client, nullptr}, opts);
    EXPECT_EQ(ev.value, clean);
    EXPECT_EQ(ev.records.size(), dev.size());
    EXPECT_EQ(server.hits(Role::Score), 3 * dev.size());
    auto served = server.served();
    EXPECT_EQ(served.size(), dev.size());
    for (const auto& [body, n] : served) {
        EXPECT_EQ(n, 1u);
    }
}
