// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace zsp {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Calls `fn(record, line_number)` for every non-blank line of a JSON Lines
/// file. Parse failures raise DataError naming the file and line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

void write_jsonl(const std::filesystem::path& path, const std::vector<OrderedJson>& records);

void write_text(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

/// Fixed 6-decimal rendering used for every metric in reports.
std::string format_metric(double value);

} // namespace zsp
