// Command line driver: solve / scan / evolve run a JSON config through the
// job runner, validate re-checks a stored artifact directory. Prints the
// artifact directory on success; any failure exits nonzero after the runner
// has written error.json (or validation.json) with the details.
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lwsw/run.hpp"

namespace {

int run_config_command(lwsw::Command cmd, const std::string& config_path,
                       const CLI::App* sub, long seed, const std::string& from,
                       const std::string& out_root) {
    lwsw::RunConfig cfg = lwsw::load_config(config_path);
    if (cfg.command != cmd) {
        std::cerr << "error: config \"" << config_path << "\" declares command \""
                  << lwsw::command_name(cfg.command)
                  << "\" but the subcommand is \"" << lwsw::command_name(cmd)
                  << "\"\n";
        return 2;
    }
    if (sub->count("--seed")) cfg.solve.seed = seed;
    if (!from.empty()) cfg.evolve.from = from;
    if (!out_root.empty()) setenv("LWSW_OUT_ROOT", out_root.c_str(), 1);
    std::cout << lwsw::run(cfg) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bound states of the coupled long-wave / short-wave system"};
    app.require_subcommand(1);

    std::string config_path, from, target, out_root;
    long seed = 0;

    auto* solve = app.add_subcommand("solve", "minimize at one constraint level");
    auto* scan = app.add_subcommand("scan", "sweep constraint levels");
    auto* evolve =
        app.add_subcommand("evolve", "time-integrate a stored bound state");
    auto* validate =
        app.add_subcommand("validate", "re-check a stored artifact directory");

    for (CLI::App* sub : {solve, scan, evolve}) {
        sub->add_option("--config", config_path, "JSON run configuration")
            ->required();
        sub->add_option("--seed", seed, "override solve.seed from the config");
        sub->add_option("--out-root", out_root,
                        "output root (overrides LWSW_OUT_ROOT)");
    }
    evolve->add_option("--from", from,
                       "stored solve result directory (overrides evolve.from)");
    validate->add_option("dir", target, "artifact directory")->required();
    validate->add_option("--out-root", out_root,
                         "output root (overrides LWSW_OUT_ROOT)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            if (!out_root.empty()) setenv("LWSW_OUT_ROOT", out_root.c_str(), 1);
            lwsw::RunConfig cfg;
            cfg.command = lwsw::Command::validate;
            cfg.output_dir = target;
            std::cout << lwsw::run(cfg) << "\n";
            return 0;
        }
        if (solve->parsed())
            return run_config_command(lwsw::Command::solve, config_path, solve,
                                      seed, from, out_root);
        if (scan->parsed())
            return run_config_command(lwsw::Command::scan, config_path, scan,
                                      seed, from, out_root);
        return run_config_command(lwsw::Command::evolve, config_path, evolve,
                                  seed, from, out_root);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
