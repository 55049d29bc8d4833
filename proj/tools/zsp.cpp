// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include <CLI11.hpp>

#include "zsp/commands.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"zero-shot prompt search pipeline"};
    app.require_subcommand(1);

    zsp::CommandOptions opts;
    std::string config;
    std::string task;
    std::string template_id;
    std::uint64_t seed = 0;
    std::string out;

    for (const auto& name : zsp::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "run config (JSON)")->required();
        sub->add_option("--task", task, "task id");
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--out", out, "output root; the run directory is created inside");
        sub->add_option("--workers", opts.workers, "concurrent backend calls")->check(CLI::PositiveNumber);
        sub->add_flag("--mock", opts.mock, "serve every backend role from an in-process mock on loopback");
        if (name == "eval") {
            sub->add_option("--template", template_id, "template id")->required();
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    auto* sub = app.get_subcommands().front();
    opts.config = config;
    if (sub->count("--task")) {
        opts.task = task;
    }
    if (sub->count("--seed")) {
        opts.seed = seed;
    }
    if (sub->count("--out")) {
        opts.out = out;
    }
    if (!template_id.empty()) {
        opts.template_id = template_id;
    }
    return zsp::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
