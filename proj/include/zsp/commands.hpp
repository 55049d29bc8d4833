// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace zsp {

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::string> task;
    std::optional<std::string> template_id;
    bool mock = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    std::size_t workers = 1;
};

const std::vector<std::string>& command_names();

/// Runs one subcommand and returns the process exit code: 0 success,
/// 1 usage or config error, 2 backend error, 3 data error. Diagnostics go
/// to `err`; the human-readable summary goes to `out`.
int run_command(const std::string& name, const CommandOptions& options, std::ostream& out, std::ostream& err);

} // namespace zsp
