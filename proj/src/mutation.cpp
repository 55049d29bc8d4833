// SPDX-License-Identifier: Apache-2.0

#include "zsp/mutation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "zsp/error.hpp"
#include "zsp/text.hpp"

namespace zsp {

namespace {

constexpr std::array<std::string_view, 4> kMarkers{"[MASK]", "[X1]", "[X2]", "[X]"};

std::string infill_sentinel(std::size_t k)
{
    return "<extra_id_" + std::to_string(k) + ">";
}

void check_options(const MutationOptions& o)
{
    if (!(o.mask_fraction >= 0.0 && o.mask_fraction < 1.0)) {
        throw ConfigError("mask_fraction must lie in [0, 1)");
    }
    if (o.max_retries < 0) {
        throw ConfigError("max_retries must be >= 0");
    }
}

bool holds_sentinel(std::string_view s, const Sentinels& sent)
{
    return s.find(sent.mask) != std::string_view::npos || s.find(sent.first) != std::string_view::npos ||
           s.find(sent.second) != std::string_view::npos;
}

[[noreturn]] void give_up(const char* what, int attempts, const std::string& last)
{
    throw DataError(std::string(what) + " produced no valid template after " + std::to_string(attempts) +
                    " attempt(s): " + last);
}

// Splits an infill completion into one fill per sentinel, in order.
std::optional<std::vector<std::string>> parse_infills(const std::string& completion, std::size_t count)
{
    std::vector<std::string> fills;
    for (std::size_t k = 0; k < count; ++k) {
        auto tag = infill_sentinel(k);
        auto start = completion.find(tag);
        if (start == std::string::npos) {
            return std::nullopt;
        }
        start += tag.size();
        auto end = completion.find("<extra_id_", start);
        fills.emplace_back(text::trim(std::string_view(completion).substr(start, end - start)));
    }
    return fills;
}

} // namespace

MutatorKind parse_mutator_kind(std::string_view s)
{
    if (s == "mask_infill") return MutatorKind::MaskInfill;
    if (s == "back_translate") return MutatorKind::BackTranslate;
    if (s == "paraphrase") return MutatorKind::Paraphrase;
    if (s == "mock") return MutatorKind::Mock;
    throw ConfigError("unknown mutator '" + std::string(s) + "' (expected mask_infill|back_translate|paraphrase|mock)");
}

std::string_view to_string(MutatorKind k)
{
    switch (k) {
    case MutatorKind::MaskInfill: return "mask_infill";
    case MutatorKind::BackTranslate: return "back_translate";
    case MutatorKind::Paraphrase: return "paraphrase";
    case MutatorKind::Mock: return "mock";
    }
    return "?";
}

std::string shield(const PromptTemplate& tmpl, const Sentinels& s)
{
    std::string out;
    for (const auto& p : split_description(tmpl.description)) {
        switch (p.kind) {
        case PieceKind::Literal:
            if (holds_sentinel(p.text, s)) {
                throw DataError("description already contains a reserved sentinel: \"" + tmpl.description + "\"");
            }
            out += p.text;
            break;
        case PieceKind::Input:
            out += p.input == 2 ? s.second : s.first;
            break;
        case PieceKind::Mask:
            out += s.mask;
            break;
        }
    }
    return out;
}

std::string unshield(const std::string& text, int arity, const Sentinels& s)
{
    auto expect = [&](const std::string& sentinel, std::size_t want, std::string_view name) {
        auto n = text::count_occurrences(text, sentinel);
        if (n != want) {
            throw DataError("placeholder " + std::string(name) + " " + (n < want ? "lost" : "duplicated") +
                            " in backend round trip: \"" + text + "\"");
        }
    };
    expect(s.mask, 1, "[MASK]");
    expect(s.first, 1, arity == 1 ? "[X]" : "[X1]");
    expect(s.second, arity == 2 ? 1 : 0, "[X2]");
    std::string out = text;
    text::replace_all(out, s.mask, kMaskMarker);
    text::replace_all(out, s.first, placeholder(arity, 0));
    if (arity == 2) {
        text::replace_all(out, s.second, placeholder(arity, 1));
    }
    return out;
}

std::vector<DescriptionToken> tokenize_description(std::string_view d, const std::vector<std::string>& extra_protected)
{
    std::vector<DescriptionToken> tokens;
    auto protected_at = [&](std::size_t pos) -> std::size_t {
        for (auto m : kMarkers) {
            if (d.substr(pos, m.size()) == m) {
                return m.size();
            }
        }
        for (const auto& m : extra_protected) {
            if (!m.empty() && d.substr(pos, m.size()) == m) {
                return m.size();
            }
        }
        return 0;
    };
    enum class Run { None, Space, Word };
    Run run = Run::None;
    std::size_t pos = 0;
    while (pos < d.size()) {
        if (auto len = protected_at(pos)) {
            tokens.push_back({std::string(d.substr(pos, len)), false});
            run = Run::None;
            pos += len;
            continue;
        }
        std::size_t start = pos;
        char32_t cp = text::decode_next(d, pos);
        auto piece = d.substr(start, pos - start);
        if (text::is_space(cp)) {
            if (run == Run::Space) {
                tokens.back().text += piece;
            } else {
                tokens.push_back({std::string(piece), false});
                run = Run::Space;
            }
        } else if (text::is_cjk(cp)) {
            tokens.push_back({std::string(piece), true});
            run = Run::None;
        } else if (run == Run::Word) {
            tokens.back().text += piece;
        } else {
            tokens.push_back({std::string(piece), true});
            run = Run::Word;
        }
    }
    return tokens;
}

MutationOutcome mutate_mask_infill(const PromptTemplate& tmpl, protocol::GenerateClient& client,
                                   const MutationOptions& options, Rng& rng)
{
    check_options(options);
    const auto& sent = options.sentinels;
    auto tokens = tokenize_description(tmpl.description);
    std::vector<std::size_t> maskable;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].maskable) {
            maskable.push_back(i);
        }
    }
    if (maskable.empty()) {
        throw DataError("description has no maskable token: \"" + tmpl.description + "\"");
    }
    const auto count = static_cast<std::size_t>(std::ceil(options.mask_fraction * static_cast<double>(maskable.size())));
    if (count == 0) {
        return {tmpl, 0, false, {}};
    }

    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        std::vector<std::size_t> chosen;
        std::sample(maskable.begin(), maskable.end(), std::back_inserter(chosen), count, rng);

        std::string request;
        std::size_t k = 0;
        std::size_t next = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const auto& tok = tokens[i].text;
            if (next < chosen.size() && chosen[next] == i) {
                request += infill_sentinel(k++);
                ++next;
            } else if (tok == kMaskMarker) {
                request += sent.mask;
            } else if (tok == "[X]" || tok == "[X1]") {
                request += sent.first;
            } else if (tok == "[X2]") {
                request += sent.second;
            } else {
                request += tok;
            }
        }

        auto response = client.generate({request, options.max_new_tokens, 0.0});
        auto fills = parse_infills(response.completion_text, count);
        if (!fills) {
            last_error = "completion lacks infill sentinels: \"" + response.completion_text + "\"";
            continue;
        }
        bool bad_fill = false;
        for (const auto& f : *fills) {
            if (holds_sentinel(f, sent)) {
                bad_fill = true;
            }
        }
        if (bad_fill) {
            last_error = "infill contains a reserved sentinel";
            continue;
        }

        PromptTemplate out = tmpl;
        out.description.clear();
        next = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (next < chosen.size() && chosen[next] == i) {
                out.description += (*fills)[next++];
            } else {
                out.description += tokens[i].text;
            }
        }
        try {
            out.validate();
        } catch (const DataError& e) {
            last_error = e.what();
            continue;
        }
        return {std::move(out), attempt, false, std::move(chosen)};
    }
    give_up("mask infill", options.max_retries + 1, last_error);
}

MutationOutcome mutate_backtranslate(const PromptTemplate& tmpl, protocol::TranslateClient& client,
                                     const MutationOptions& options)
{
    check_options(options);
    const auto shielded = shield(tmpl, options.sentinels);
    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        auto there = client.translate({shielded, options.source_lang, options.pivot_lang});
        auto back = client.translate({there.text, options.pivot_lang, options.source_lang});
        PromptTemplate out = tmpl;
        try {
            out.description = unshield(back.text, tmpl.arity, options.sentinels);
            out.validate();
        } catch (const DataError& e) {
            last_error = e.what();
            continue;
        }
        return {std::move(out), attempt, false, {}};
    }
    give_up("back-translation", options.max_retries + 1, last_error);
}

MutationOutcome mutate_paraphrase(const PromptTemplate& tmpl, protocol::GenerateClient& client,
                                  const MutationOptions& options)
{
    check_options(options);
    if (options.meta_prompt.find("{prompt}") == std::string::npos) {
        throw ConfigError("paraphrase meta prompt lacks the {prompt} insertion point");
    }
    std::string request = options.meta_prompt;
    text::replace_all(request, "{prompt}", tmpl.description);

    const auto& sent = options.sentinels;
    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        auto response = client.generate({request, options.max_new_tokens, 0.0});
        std::string candidate;
        std::string_view rest = response.completion_text;
        while (!rest.empty() && candidate.empty()) {
            auto nl = rest.find('\n');
            candidate = std::string(text::trim(rest.substr(0, nl)));
            rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        }
        if (candidate.empty()) {
            last_error = "unparseable (empty) completion";
            continue;
        }
        text::replace_all(candidate, sent.mask, kMaskMarker);
        text::replace_all(candidate, sent.first, placeholder(tmpl.arity, 0));
        if (tmpl.arity == 2) {
            text::replace_all(candidate, sent.second, placeholder(tmpl.arity, 1));
        }

        bool reappended = false;
        if (text::count_occurrences(candidate, kMaskMarker) == 0) {
            candidate += kMaskMarker;
            reappended = true;
        }
        PromptTemplate out = tmpl;
        out.description = std::move(candidate);
        try {
            out.validate();
        } catch (const DataError& e) {
            last_error = e.what();
            continue;
        }
        return {std::move(out), attempt, reappended, {}};
    }
    give_up("paraphrase", options.max_retries + 1, last_error);
}

MutationOutcome mutate_mock(const PromptTemplate& tmpl, const MutationContext& ctx)
{
    PromptTemplate out = tmpl;
    const std::string letter(1, static_cast<char>('a' + ctx.offspring % 26));
    auto pos = out.description.find(kMaskMarker);
    if (pos == std::string::npos) {
        out.description += letter;
    } else {
        out.description.insert(pos, letter);
    }
    return {std::move(out), 0, false, {}};
}

MutateFn make_mutator(MutatorKind kind, const MutatorClients& clients, MutationOptions options)
{
    check_options(options);
    switch (kind) {
    case MutatorKind::MaskInfill:
        if (clients.generate == nullptr) {
            throw ConfigError("mask_infill mutator needs a generate endpoint");
        }
        return [client = clients.generate, options](const PromptTemplate& t, Rng& rng, const MutationContext&) {
            return mutate_mask_infill(t, *client, options, rng);
        };
    case MutatorKind::BackTranslate:
        if (clients.translate == nullptr) {
            throw ConfigError("back_translate mutator needs a translate endpoint");
        }
        return [client = clients.translate, options](const PromptTemplate& t, Rng&, const MutationContext&) {
            return mutate_backtranslate(t, *client, options);
        };
    case MutatorKind::Paraphrase:
        if (clients.generate == nullptr) {
            throw ConfigError("paraphrase mutator needs a generate endpoint");
        }
        if (options.meta_prompt.find("{prompt}") == std::string::npos) {
            throw ConfigError("paraphrase meta prompt lacks the {prompt} insertion point");
        }
        return [client = clients.generate, options](const PromptTemplate& t, Rng&, const MutationContext&) {
            return mutate_paraphrase(t, *client, options);
        };
    case MutatorKind::Mock:
        return [](const PromptTemplate& t, Rng&, const MutationContext& ctx) { return mutate_mock(t, ctx); };
    }
    throw ConfigError("unknown mutator kind");
}

} // namespace zsp
