// SPDX-License-Identifier: Apache-2.0

#include "zsp/prompt.hpp"

#include <array>
#include <unordered_set>

#include "zsp/error.hpp"
#include "zsp/jsonl.hpp"
#include "zsp/text.hpp"

namespace zsp {

namespace {

struct Marker {
    std::string_view text;
    PieceKind kind;
    int input;
};

constexpr std::array<Marker, 4> kMarkers{{
    {"[X]", PieceKind::Input, 0},
    {"[X1]", PieceKind::Input, 1},
    {"[X2]", PieceKind::Input, 2},
    {"[MASK]", PieceKind::Mask, 0},
}};

} // namespace

std::vector<DescriptionPiece> split_description(std::string_view d)
{
    std::vector<DescriptionPiece> pieces;
    std::string literal;
    std::size_t pos = 0;
    while (pos < d.size()) {
        bool matched = false;
        if (d[pos] == '[') {
            for (const auto& m : kMarkers) {
                if (d.substr(pos, m.text.size()) == m.text) {
                    if (!literal.empty()) {
                        pieces.push_back({PieceKind::Literal, std::move(literal), 0});
                        literal.clear();
                    }
                    pieces.push_back({m.kind, std::string(m.text), m.input});
                    pos += m.text.size();
                    matched = true;
                    break;
                }
            }
        }
        if (!matched) {
            literal.push_back(d[pos]);
            ++pos;
        }
    }
    if (!literal.empty()) {
        pieces.push_back({PieceKind::Literal, std::move(literal), 0});
    }
    return pieces;
}

std::string_view placeholder(int arity, int i)
{
    if (arity == 1) {
        return "[X]";
    }
    return i == 0 ? "[X1]" : "[X2]";
}

void PromptTemplate::validate() const
{
    if (arity != 1 && arity != 2) {
        throw DataError("template arity must be 1 or 2, got " + std::to_string(arity));
    }
    if (soft_slot_len < 0) {
        throw DataError("soft_slot_len must be >= 0");
    }
    std::unordered_set<std::string> seen;
    for (const auto& v : verbalizers) {
        if (v.empty()) {
            throw DataError("empty verbalizer candidate");
        }
        if (!seen.insert(v).second) {
            throw DataError("duplicate verbalizer candidate '" + v + "'");
        }
    }
    int counts[3] = {0, 0, 0};
    int masks = 0;
    for (const auto& p : split_description(description)) {
        if (p.kind == PieceKind::Input) {
            ++counts[p.input];
        } else if (p.kind == PieceKind::Mask) {
            ++masks;
        }
    }
    auto expect = [&](int idx, int want) {
        if (counts[idx] != want) {
            const char* name = idx == 0 ? "[X]" : (idx == 1 ? "[X1]" : "[X2]");
            throw DataError(std::string("description must contain ") + name + " exactly " +
                            std::to_string(want) + " time(s), found " + std::to_string(counts[idx]) +
                            ": \"" + description + "\"");
        }
    };
    expect(0, arity == 1 ? 1 : 0);
    expect(1, arity == 2 ? 1 : 0);
    expect(2, arity == 2 ? 1 : 0);
    if (masks != 1) {
        throw DataError("description must contain [MASK] exactly once, found " + std::to_string(masks) +
                        ": \"" + description + "\"");
    }
}

std::string concat_verbalizers(const std::vector<std::string>& candidates, std::string_view separator)
{
    if (candidates.empty()) {
        throw DataError("empty verbalizer set");
    }
    std::unordered_set<std::string_view> seen;
    std::string out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].empty()) {
            throw DataError("empty verbalizer candidate");
        }
        if (!seen.insert(candidates[i]).second) {
            throw DataError("duplicate verbalizer candidate '" + candidates[i] + "'");
        }
        if (i > 0) {
            out.append(separator);
        }
        out.append(candidates[i]);
    }
    return out;
}

RenderedPrompt render(const PromptTemplate& tmpl, const LabeledExample& example, const RenderOptions& options)
{
    if (example.segments.size() != static_cast<std::size_t>(tmpl.arity)) {
        throw DataError("arity mismatch: template expects " + std::to_string(tmpl.arity) +
                        " segment(s), example '" + example.id + "' has " +
                        std::to_string(example.segments.size()));
    }
    tmpl.validate();

    RenderedPrompt out;
    for (int i = 0; i < tmpl.soft_slot_len; ++i) {
        out.text += options.soft_marker;
    }
    out.soft_marker_count = tmpl.soft_slot_len;
    if (!tmpl.verbalizers.empty()) {
        out.text += options.verbalizer_prefix;
        out.text += concat_verbalizers(tmpl.verbalizers, options.verbalizer_separator);
        out.text += options.verbalizer_suffix;
    }
    for (const auto& p : split_description(tmpl.description)) {
        switch (p.kind) {
        case PieceKind::Literal:
            out.text += p.text;
            break;
        case PieceKind::Input:
            out.text += example.segments[p.input == 0 ? 0 : p.input - 1];
            break;
        case PieceKind::Mask:
            out.mask_offset = out.text.size();
            out.text += kMaskMarker;
            break;
        }
    }
    return out;
}

std::string instruction_text(const PromptTemplate& tmpl)
{
    std::string out;
    for (const auto& p : split_description(tmpl.description)) {
        if (p.kind == PieceKind::Literal) {
            out += p.text;
        }
    }
    return out;
}

std::vector<NamedTemplate> load_templates(const std::filesystem::path& path)
{
    std::vector<NamedTemplate> out;
    std::unordered_set<std::string> ids;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        const std::string where = path.string() + ":" + std::to_string(line);
        NamedTemplate t;
        try {
            t.id = j.at("id").get<std::string>();
            t.task_id = j.value("task_id", std::string{});
            t.prompt.description = j.at("description").get<std::string>();
            t.prompt.arity = j.value("arity", 1);
            t.prompt.soft_slot_len = j.value("soft_slot_len", 0);
            if (auto it = j.find("verbalizers"); it != j.end()) {
                t.prompt.verbalizers = it->get<std::vector<std::string>>();
            }
        } catch (const Json::exception& e) {
            throw DataError(where + ": bad template record: " + e.what());
        }
        try {
            t.prompt.validate();
        } catch (const DataError& e) {
            throw DataError(where + ": template '" + t.id + "': " + e.what());
        }
        if (!ids.insert(t.id).second) {
            throw DataError(where + ": duplicate template id '" + t.id + "'");
        }
        out.push_back(std::move(t));
    });
    return out;
}

} // namespace zsp
