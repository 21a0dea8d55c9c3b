#include <CLI11.hpp>

#include "sthdg/cli.hpp"

using namespace sthdg;

int main(int argc, char** argv) {
    CLI::App app{"space-time HDG solver for the 2D incompressible Navier-Stokes equations"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    uint64_t seed = 0;
    bool seed_set = false, out_set = false;
    int levels = 0;
    bool levels_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file (key = value lines)");
        sub->add_option("--seed", seed, "random seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--out", out_dir, "output directory override")->each([&](const std::string&) {
            out_set = true;
        });
        sub->add_option("--levels", levels, "refinement levels override")->each([&](const std::string&) {
            levels_set = true;
        });
    };

    CLI::App* run = app.add_subcommand("run", "march the scheme and emit ledgers + VTK snapshots");
    CLI::App* verify = app.add_subcommand("verify", "operator identities, constants, energy checks");
    CLI::App* conv = app.add_subcommand("convergence", "refinement studies and observed orders");
    CLI::App* info = app.add_subcommand("mesh-info", "mesh metrics report");
    for (CLI::App* sub : {run, verify, conv, info}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config(config_path);
        if (seed_set) cfg.seed = seed;
        if (out_set) cfg.out_dir = out_dir;
        if (levels_set) cfg.levels = levels;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return exit_io_error;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    }

    if (run->parsed()) return cmd_run(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
    if (conv->parsed()) return cmd_convergence(cfg);
    if (info->parsed()) return cmd_mesh_info(cfg);
    return exit_config_error;
}
