// SPDX-License-Identifier: Apache-2.0

#include "zsp/gps.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "zsp/error.hpp"
#include "zsp/parallel.hpp"
#include "zsp/text.hpp"

namespace zsp {

namespace {

std::string candidate_key(const PromptTemplate& p)
{
    std::string key = p.description;
    key += '\x1f';
    key += std::to_string(p.soft_slot_len);
    for (const auto& v : p.verbalizers) {
        key += '\x1f';
        key += v;
    }
    return key;
}

// Re-raises a library error with the candidate's identity prepended,
// keeping the error category intact.
[[noreturn]] void rethrow_with_context(const std::string& context)
{
    try {
        throw;
    } catch (const BackendError& e) {
        throw BackendError(context + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(context + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(context + ": " + e.what());
    }
}

std::string make_id(int generation, int index)
{
    return "g" + std::to_string(generation) + "-" + std::to_string(index);
}

} // namespace

void GpsConfig::validate() const
{
    if (iterations < 0) {
        throw ConfigError("gps iterations must be >= 0");
    }
    if (top_k < 1) {
        throw ConfigError("gps top_k must be >= 1");
    }
    if (offspring_per_parent < 1) {
        throw ConfigError("gps offspring_per_parent must be >= 1");
    }
    if (workers < 1) {
        throw ConfigError("gps workers must be >= 1");
    }
}

std::vector<Candidate> select_top_k(std::span<const Candidate> scored, std::size_t k)
{
    std::vector<const Candidate*> order;
    order.reserve(scored.size());
    for (const auto& c : scored) {
        if (!c.score) {
            throw DataError("select_top_k: candidate " + c.id + " has no score");
        }
        order.push_back(&c);
    }
    std::stable_sort(order.begin(), order.end(), [](const Candidate* a, const Candidate* b) {
        if (*a->score != *b->score) {
            return *a->score > *b->score;
        }
        if (a->generation != b->generation) {
            return a->generation < b->generation;
        }
        return a->index_in_generation < b->index_in_generation;
    });
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
        out.push_back(*order[i]);
    }
    return out;
}

GpsResult run_gps(std::span<const PromptTemplate> g0, std::span<const LabeledExample> dev, const ScoreFn& scorer,
                  const MutateFn& mutator, const GpsConfig& config)
{
    config.validate();
    if (g0.empty()) {
        throw ConfigError("genetic prompt search needs at least one initial prompt");
    }
    if (dev.empty()) {
        throw DataError("genetic prompt search needs a non-empty dev set");
    }

    GpsResult result;
    std::unordered_set<std::string> seen;

    Generation current;
    current.t = 0;
    for (const auto& p : g0) {
        if (config.dedup && !seen.insert(candidate_key(p)).second) {
            ++current.duplicates_dropped;
            continue;
        }
        Candidate c;
        c.prompt = p;
        c.generation = 0;
        c.index_in_generation = static_cast<int>(current.candidates.size());
        c.id = make_id(0, c.index_in_generation);
        current.candidates.push_back(std::move(c));
    }

    for (int t = 0; t <= config.iterations; ++t) {
        auto& cands = current.candidates;
        parallel_for(cands.size(), config.workers, [&](std::size_t i) {
            double s;
            try {
                s = scorer(cands[i].prompt, dev);
            } catch (const Error&) {
                rethrow_with_context("scoring candidate " + cands[i].id);
            }
            if (!std::isfinite(s)) {
                throw DataError("scoring candidate " + cands[i].id + ": scorer returned a non-finite score");
            }
            cands[i].score = s;
        });

        auto parents = select_top_k(cands, config.top_k);
        for (const auto& p : parents) {
            current.reproductive_group.push_back(p.id);
        }

        Generation next;
        next.t = t + 1;
        if (t < config.iterations) {
            const std::size_t per = static_cast<std::size_t>(config.offspring_per_parent);
            std::vector<MutationOutcome> outcomes(parents.size() * per);
            parallel_for(outcomes.size(), config.workers, [&](std::size_t slot) {
                const auto& parent = parents[slot / per];
                Rng rng = make_rng(config.rng_seed, {static_cast<std::uint64_t>(t + 1), slot});
                try {
                    MutationContext ctx{t + 1, slot / per, slot % per};
                    outcomes[slot] = mutator(parent.prompt, rng, ctx);
                } catch (const Error&) {
                    rethrow_with_context("mutating candidate " + parent.id);
                }
            });
            for (std::size_t slot = 0; slot < outcomes.size(); ++slot) {
                auto& o = outcomes[slot];
                if (config.dedup && !seen.insert(candidate_key(o.prompt)).second) {
                    ++next.duplicates_dropped;
                    continue;
                }
                Candidate c;
                c.prompt = std::move(o.prompt);
                c.generation = t + 1;
                c.index_in_generation = static_cast<int>(next.candidates.size());
                c.id = make_id(c.generation, c.index_in_generation);
                c.parent_id = parents[slot / per].id;
                c.retries = o.retries;
                c.mask_reappended = o.mask_reappended;
                next.candidates.push_back(std::move(c));
            }
        }
        result.generations.push_back(std::move(current));
        current = std::move(next);
    }

    std::vector<Candidate> all;
    for (const auto& g : result.generations) {
        all.insert(all.end(), g.candidates.begin(), g.candidates.end());
    }
    result.final_top_k = select_top_k(all, config.top_k);
    return result;
}

ScoreFn instruction_length_scorer()
{
    return [](const PromptTemplate& p, std::span<const LabeledExample>) {
        return static_cast<double>(text::length(instruction_text(p)));
    };
}

OrderedJson to_json(const Candidate& c)
{
    OrderedJson j;
    j["id"] = c.id;
    j["description"] = c.prompt.description;
    j["instruction"] = instruction_text(c.prompt);
    j["soft_slot_len"] = c.prompt.soft_slot_len;
    j["verbalizers"] = c.prompt.verbalizers;
    j["generation"] = c.generation;
    j["parent"] = c.parent_id ? OrderedJson(*c.parent_id) : OrderedJson(nullptr);
    j["score"] = c.score ? OrderedJson(*c.score) : OrderedJson(nullptr);
    if (c.retries > 0) {
        j["retries"] = c.retries;
    }
    if (c.mask_reappended) {
        j["mask_reappended"] = true;
    }
    return j;
}

OrderedJson to_json(const GpsResult& result)
{
    OrderedJson gens = OrderedJson::array();
    for (const auto& g : result.generations) {
        OrderedJson cands = OrderedJson::array();
        for (const auto& c : g.candidates) {
            cands.push_back(to_json(c));
        }
        OrderedJson gj;
        gj["t"] = g.t;
        gj["candidates"] = cands;
        gj["reproductive_group"] = g.reproductive_group;
        gj["duplicates_dropped"] = g.duplicates_dropped;
        gens.push_back(std::move(gj));
    }
    OrderedJson top = OrderedJson::array();
    for (const auto& c : result.final_top_k) {
        top.push_back(to_json(c));
    }
    OrderedJson j;
    j["generations"] = gens;
    j["final_top_k"] = top;
    return j;
}

} // namespace zsp
