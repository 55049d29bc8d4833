// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "zsp/task_registry.hpp"

namespace zsp {

/// Hybrid prompt template: soft prefix, verbalizer candidates, and a task
/// description that embeds the input placeholders and one mask marker.
struct PromptTemplate {
    int soft_slot_len = 0;
    std::vector<std::string> verbalizers;
    std::string description;
    int arity = 1;

    /// Throws DataError when a template invariant is broken.
    void validate() const;

    bool operator==(const PromptTemplate&) const = default;
};

/// A template as stored in a template file.
struct NamedTemplate {
    std::string id;
    std::string task_id;
    PromptTemplate prompt;
};

struct RenderOptions {
    std::string verbalizer_separator = "/";
    std::string verbalizer_prefix = "选项：";
    std::string verbalizer_suffix = "。";
    std::string soft_marker = "⟨p⟩";
};

struct RenderedPrompt {
    std::string text;
    std::size_t mask_offset = 0;  // byte offset of "[MASK]" in text
    int soft_marker_count = 0;
};

enum class PieceKind { Literal, Input, Mask };

/// One piece of a parsed description. `input` is 0 for [X], 1/2 for [X1]/[X2].
struct DescriptionPiece {
    PieceKind kind = PieceKind::Literal;
    std::string text;
    int input = 0;
};

std::vector<DescriptionPiece> split_description(std::string_view description);

/// Placeholder string for segment `i` of a template with the given arity.
std::string_view placeholder(int arity, int i);

/// Joins verbalizer candidates in order. Throws DataError on an empty list,
/// an empty candidate, or a duplicate.
std::string concat_verbalizers(const std::vector<std::string>& candidates,
                               std::string_view separator = "/");

RenderedPrompt render(const PromptTemplate& tmpl, const LabeledExample& example,
                      const RenderOptions& options = {});

/// Description with placeholders and the mask marker removed.
std::string instruction_text(const PromptTemplate& tmpl);

std::vector<NamedTemplate> load_templates(const std::filesystem::path& path);

} // namespace zsp
