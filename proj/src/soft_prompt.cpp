// SPDX-License-Identifier: Apache-2.0

#include "zsp/soft_prompt.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "zsp/error.hpp"
#include "zsp/jsonl.hpp"
#include "zsp/random.hpp"

namespace zsp {

namespace {

constexpr double kProbSumTolerance = 1e-6;
constexpr const char* kStoreMagic = "ZSPEMB";

void check_store(std::span<const TaskEmbedding> store)
{
    if (store.empty()) {
        throw DataError("embedding store is empty");
    }
    for (const auto& e : store) {
        e.validate();
        if (e.rows != store[0].rows || e.cols != store[0].cols) {
            throw DataError("embedding '" + e.task_id + "' is " + std::to_string(e.rows) + "x" +
                            std::to_string(e.cols) + ", expected " + std::to_string(store[0].rows) + "x" +
                            std::to_string(store[0].cols));
        }
    }
}

} // namespace

void TaskEmbedding::validate() const
{
    if (rows == 0 || cols == 0) {
        throw DataError("embedding '" + task_id + "' has an empty dimension");
    }
    if (values.size() != rows * cols) {
        throw DataError("embedding '" + task_id + "' holds " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(rows * cols));
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw DataError("embedding '" + task_id + "' has a non-finite value");
        }
    }
}

void SimilarityProfile::validate() const
{
    if (probs.empty()) {
        throw DataError("similarity profile is empty");
    }
    double sum = 0.0;
    for (const auto& p : probs) {
        if (!(p.prob >= 0.0 && p.prob <= 1.0)) {
            throw DataError("probability for '" + p.task_id + "' is outside [0,1]");
        }
        sum += p.prob;
    }
    if (std::abs(sum - 1.0) > kProbSumTolerance) {
        throw DataError("similarity probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
}

std::vector<double> aligned_probs(std::span<const TaskEmbedding> store, const SimilarityProfile& profile)
{
    check_store(store);
    profile.validate();
    std::unordered_map<std::string, double> by_id;
    for (const auto& p : profile.probs) {
        if (!by_id.emplace(p.task_id, p.prob).second) {
            throw DataError("task '" + p.task_id + "' appears twice in the similarity profile");
        }
    }
    std::vector<double> out;
    out.reserve(store.size());
    for (const auto& e : store) {
        auto it = by_id.find(e.task_id);
        if (it == by_id.end()) {
            throw DataError("similarity profile has no probability for task '" + e.task_id + "'");
        }
        out.push_back(it->second);
        by_id.erase(it);
    }
    if (!by_id.empty()) {
        throw DataError("similarity profile names task '" + by_id.begin()->first + "' missing from the store");
    }
    return out;
}

TaskEmbedding compose_weighted(std::span<const TaskEmbedding> store, const SimilarityProfile& profile,
                               const std::string& new_task_id)
{
    auto probs = aligned_probs(store, profile);
    TaskEmbedding out{new_task_id, store[0].rows, store[0].cols, {}};
    bool started = false;
    // Zero-weight terms are skipped, so a one-hot profile returns its
    // embedding bit for bit (no 0.0 + -0.0 sign flips).
    for (std::size_t i = 0; i < store.size(); ++i) {
        if (probs[i] == 0.0) {
            continue;
        }
        if (!started) {
            out.values.resize(store[i].values.size());
            for (std::size_t j = 0; j < out.values.size(); ++j) {
                out.values[j] = probs[i] * store[i].values[j];
            }
            started = true;
        } else {
            for (std::size_t j = 0; j < out.values.size(); ++j) {
                out.values[j] += probs[i] * store[i].values[j];
            }
        }
    }
    if (!started) {
        out.values.assign(out.rows * out.cols, 0.0);
    }
    return out;
}

TaskEmbedding compose_top1(std::span<const TaskEmbedding> store, const SimilarityProfile& profile,
                           const std::string& new_task_id)
{
    auto probs = aligned_probs(store, profile);
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) {
            best = i;
        }
    }
    TaskEmbedding out = store[best];
    out.task_id = new_task_id;
    return out;
}

TaskEmbedding random_init(std::size_t rows, std::size_t cols, std::uint64_t seed, double sigma,
                          const std::string& new_task_id)
{
    if (rows == 0 || cols == 0) {
        throw ConfigError("random_init needs positive dimensions");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("random_init sigma must be positive");
    }
    Rng rng = make_rng(seed, {0x50524f4d5054ULL});
    std::normal_distribution<double> dist(0.0, sigma);
    TaskEmbedding out{new_task_id, rows, cols, std::vector<double>(rows * cols)};
    for (auto& v : out.values) {
        v = dist(rng);
    }
    return out;
}

SampleAggregation parse_sample_aggregation(std::string_view name)
{
    if (name == "average_profiles") {
        return SampleAggregation::AverageProfiles;
    }
    if (name == "average_embeddings") {
        return SampleAggregation::AverageEmbeddings;
    }
    throw ConfigError("unknown sample aggregation '" + std::string(name) + "'");
}

TaskEmbedding compose_per_sample(std::span<const TaskEmbedding> store, std::span<const SimilarityProfile> samples,
                                 SampleAggregation policy, const std::string& new_task_id)
{
    if (samples.empty()) {
        throw DataError("no per-sample similarity profiles");
    }
    const double w = 1.0 / static_cast<double>(samples.size());
    if (policy == SampleAggregation::AverageProfiles) {
        std::vector<double> mean(store.size(), 0.0);
        for (const auto& s : samples) {
            auto p = aligned_probs(store, s);
            for (std::size_t i = 0; i < p.size(); ++i) {
                mean[i] += w * p[i];
            }
        }
        SimilarityProfile avg;
        for (std::size_t i = 0; i < store.size(); ++i) {
            avg.probs.push_back({store[i].task_id, mean[i]});
        }
        return compose_weighted(store, avg, new_task_id);
    }
    TaskEmbedding out;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        auto e = compose_weighted(store, samples[k], new_task_id);
        if (k == 0) {
            out = e;
            for (auto& v : out.values) {
                v *= w;
            }
        } else {
            for (std::size_t j = 0; j < out.values.size(); ++j) {
                out.values[j] += w * e.values[j];
            }
        }
    }
    return out;
}

void write_embedding_store(const std::filesystem::path& path, std::span<const TaskEmbedding> store)
{
    check_store(store);
    std::ostringstream os;
    os << kStoreMagic << ' ' << store.size() << '\n';
    for (const auto& e : store) {
        if (e.task_id.empty() || e.task_id.find_first_of(" \t\r\n") != std::string::npos) {
            throw DataError("task id '" + e.task_id + "' cannot be stored (empty or contains whitespace)");
        }
        os << e.task_id << ' ' << e.rows << ' ' << e.cols << '\n';
        for (double v : e.values) {
            float f = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &f, sizeof bits);
            for (int b = 0; b < 4; ++b) {
                os.put(static_cast<char>((bits >> (8 * b)) & 0xFF));
            }
        }
    }
    write_text(path, os.str());
}

std::vector<TaskEmbedding> read_embedding_store(const std::filesystem::path& path)
{
    std::string data = read_text(path);
    std::size_t pos = 0;
    auto read_line = [&]() {
        auto nl = data.find('\n', pos);
        if (nl == std::string::npos) {
            throw DataError(path.string() + ": truncated embedding store header");
        }
        std::string line = data.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };
    std::istringstream head(read_line());
    std::string magic;
    std::size_t count = 0;
    if (!(head >> magic >> count) || magic != kStoreMagic) {
        throw DataError(path.string() + ": not an embedding store");
    }
    std::vector<TaskEmbedding> store;
    for (std::size_t k = 0; k < count; ++k) {
        std::istringstream hdr(read_line());
        TaskEmbedding e;
        if (!(hdr >> e.task_id >> e.rows >> e.cols)) {
            throw DataError(path.string() + ": malformed header for embedding " + std::to_string(k));
        }
        const std::size_t n = e.rows * e.cols;
        if (data.size() - pos < 4 * n) {
            throw DataError(path.string() + ": truncated values for '" + e.task_id + "'");
        }
        e.values.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) {
                bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + b])) << (8 * b);
            }
            pos += 4;
            float f;
            std::memcpy(&f, &bits, sizeof f);
            e.values[j] = f;
        }
        store.push_back(std::move(e));
    }
    check_store(store);
    return store;
}

SimilarityProfile read_profile(const std::filesystem::path& path)
{
    SimilarityProfile profile;
    for_each_jsonl(path, [&](const Json& rec, std::size_t line) {
        if (!rec.is_object() || !rec.contains("task_id") || !rec["task_id"].is_string() || !rec.contains("prob") ||
            !rec["prob"].is_number()) {
            throw DataError(path.string() + ":" + std::to_string(line) + ": expected {task_id, prob}");
        }
        profile.probs.push_back({rec["task_id"].get<std::string>(), rec["prob"].get<double>()});
    });
    profile.validate();
    return profile;
}

void write_profile(const std::filesystem::path& path, const SimilarityProfile& profile)
{
    std::vector<OrderedJson> records;
    for (const auto& p : profile.probs) {
        records.push_back(OrderedJson{{"task_id", p.task_id}, {"prob", p.prob}});
    }
    write_jsonl(path, records);
}

} // namespace zsp
