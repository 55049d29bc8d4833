// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "zsp/gps.hpp"
#include "zsp/prompt.hpp"
#include "zsp/protocol.hpp"
#include "zsp/random.hpp"

namespace zsp {

enum class MutatorKind { MaskInfill, BackTranslate, Paraphrase, Mock };

MutatorKind parse_mutator_kind(std::string_view s);
std::string_view to_string(MutatorKind k);

/// Reserved strings that stand in for [MASK], [X]/[X1] and [X2] while a
/// description passes through a translation or generation backend. The
/// defaults hold no letters, so case mapping cannot corrupt them.
struct Sentinels {
    std::string mask = "⟦0⟧";
    std::string first = "⟦1⟧";
    std::string second = "⟦2⟧";
};

std::string shield(const PromptTemplate& tmpl, const Sentinels& s);
/// Inverse of shield. Throws DataError when a sentinel was lost or duplicated.
std::string unshield(const std::string& text, int arity, const Sentinels& s);

/// A unit of a description for masking: a protected marker, whitespace, or
/// a maskable token (one CJK code point, or a run of other non-space code
/// points).
struct DescriptionToken {
    std::string text;
    bool maskable = false;
};

/// Tokenizes a description; the concatenation of the token texts is the
/// input. `extra_protected` strings are kept whole and never maskable.
std::vector<DescriptionToken> tokenize_description(std::string_view description,
                                                   const std::vector<std::string>& extra_protected = {});

struct MutationOptions {
    double mask_fraction = 0.25;
    int max_retries = 3;            // after the first attempt
    std::string source_lang = "zh";
    std::string pivot_lang = "en";
    std::string meta_prompt = "将下面的任务描述改写成意思相同的另一种说法，保留方括号中的占位符：\n{prompt}";
    int max_new_tokens = 64;
    Sentinels sentinels;
};

/// Replaces ceil(fraction * n) randomly chosen maskable tokens with
/// backend infills; "<extra_id_k>" marks the k-th masked token.
MutationOutcome mutate_mask_infill(const PromptTemplate& tmpl, protocol::GenerateClient& client,
                                   const MutationOptions& options, Rng& rng);

/// Round-trips the shielded description source -> pivot -> source.
MutationOutcome mutate_backtranslate(const PromptTemplate& tmpl, protocol::TranslateClient& client,
                                     const MutationOptions& options);

/// Asks a generator for a rewrite of the description via the meta prompt,
/// whose "{prompt}" marks where the description goes.
MutationOutcome mutate_paraphrase(const PromptTemplate& tmpl, protocol::GenerateClient& client,
                                  const MutationOptions& options);

/// Inserts the letter 'a' + offspring number right before the mask marker
/// (or at the end when there is none); a deterministic stand-in for real
/// mutators.
MutationOutcome mutate_mock(const PromptTemplate& tmpl, const MutationContext& ctx);

struct MutatorClients {
    protocol::GenerateClient* generate = nullptr;
    protocol::TranslateClient* translate = nullptr;
};

/// Binds a mutator kind to its backend. Throws ConfigError if the kind's
/// required endpoint is missing.
MutateFn make_mutator(MutatorKind kind, const MutatorClients& clients, MutationOptions options);

} // namespace zsp
