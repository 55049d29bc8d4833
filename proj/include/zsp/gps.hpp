// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zsp/jsonl.hpp"
#include "zsp/prompt.hpp"
#include "zsp/random.hpp"
#include "zsp/task_registry.hpp"

namespace zsp {

struct GpsConfig {
    int iterations = 2;             // T: generations 0..T are scored
    std::size_t top_k = 3;          // K
    int offspring_per_parent = 2;
    std::uint64_t rng_seed = 0;
    bool dedup = true;
    std::size_t workers = 1;        // concurrent scorer/mutator calls

    void validate() const;
};

/// What a mutator produced, plus lineage metadata.
struct MutationOutcome {
    PromptTemplate prompt;
    int retries = 0;
    bool mask_reappended = false;
    std::vector<std::size_t> masked_positions;
};

/// Where an offspring sits: generation being produced, parent rank within
/// the reproductive group, and offspring number for that parent.
struct MutationContext {
    int generation = 0;
    std::size_t parent_rank = 0;
    std::size_t offspring = 0;
};

using ScoreFn = std::function<double(const PromptTemplate&, std::span<const LabeledExample>)>;
using MutateFn = std::function<MutationOutcome(const PromptTemplate&, Rng&, const MutationContext&)>;

struct Candidate {
    std::string id;  // "g<generation>-<index>"
    PromptTemplate prompt;
    int generation = 0;
    int index_in_generation = 0;
    std::optional<std::string> parent_id;
    std::optional<double> score;
    int retries = 0;
    bool mask_reappended = false;
};

struct Generation {
    int t = 0;
    std::vector<Candidate> candidates;
    std::vector<std::string> reproductive_group;  // ids of the top-K, best first
    std::size_t duplicates_dropped = 0;
};

struct GpsResult {
    std::vector<Generation> generations;
    std::vector<Candidate> final_top_k;
};

/// Best min(k, n) candidates by descending score; ties go to the lower
/// generation, then the lower index. Throws DataError on an unscored
/// candidate.
std::vector<Candidate> select_top_k(std::span<const Candidate> scored, std::size_t k);

/// Genetic prompt search: score G^t, keep the top K as parents, mutate them
/// into G^{t+1}; the answer is the top K over every scored generation. The
/// last generation is not mutated since its offspring would never be scored.
GpsResult run_gps(std::span<const PromptTemplate> g0, std::span<const LabeledExample> dev,
                  const ScoreFn& scorer, const MutateFn& mutator, const GpsConfig& config);

/// Mock fitness: code-point length of the description with placeholders and
/// the mask marker removed.
ScoreFn instruction_length_scorer();

OrderedJson to_json(const Candidate& c);
OrderedJson to_json(const GpsResult& result);

} // namespace zsp
