#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "commands.hpp"
#include "finhardy/error.hpp"

using namespace finhardy;

int main(int argc, char** argv) {
    CLI::App app{"Anisotropic Hardy inequality experiments on analytic domains"};
    app.footer("Config keys ([section] key = value):\n" + config_reference());
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    for (const auto& name : subcommand_names()) {
        CLI::App* sub = app.add_subcommand(name);
        if (name == "repro-all") {
            sub->add_option("--config", config_path, "directory of *.conf files")->default_val("configs/acceptance");
            sub->add_option("--out", out_dir, "output directory")->default_val("repro");
        } else {
            sub->add_option("--config", config_path, "config file")->required();
            sub->add_option("--out", out_dir, "output directory (default: output.dir)");
        }
        sub->add_option("--seed", seed, "seed (overrides output.seed)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (name == "repro-all") return repro_all(config_path, out_dir, seed, std::cout);
        RunConfig cfg = load_config(config_path);
        if (seed) cfg.output.seed = *seed;
        return run_subcommand(name, cfg, out_dir.empty() ? cfg.output.dir : out_dir, std::cout);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
}
