#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "cjsr/app.hpp"

namespace app = cjsr::app;

int main(int argc, char** argv) {
    CLI::App cli{"Constrained joint spectral radius toolkit"};
    cli.require_subcommand(1);

    std::string config;
    std::optional<std::string> out;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::optional<std::uint64_t> seed_override;
    bool oracle = false;

    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config, needs_config ? "config file" : "directory of bundled configs");
        if (needs_config) opt->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (default: $CJSR_OUT_DIR, else report to stdout)");
        sub->add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
        sub->add_option("--seed-override", seed_override, "replace every seed in the config");
        sub->add_flag("--oracle-mode", oracle, "disable pruning");
    };
    for (const auto& [name, what] : {std::pair{"jsr", "bounds, certificate and probes for a matrix family"},
                                     std::pair{"markov", "Lyapunov exponents of a Markov jump linear system"},
                                     std::pair{"rotation", "rotation-driven cocycle gallery"},
                                     std::pair{"ode", "fundamental-matrix checks for a driven linear flow"}})
        common(cli.add_subcommand(name, what), true);
    common(cli.add_subcommand("reproduce", "run the bundled reproduction configs"), false);

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.exit(e);
        return rc == 0 ? 0 : app::kExitConfig;
    }

    const std::string command = cli.get_subcommands().front()->get_name();
    app::RunOptions opts;
    opts.threads = threads;
    opts.seed_override = seed_override;
    opts.oracle_mode = oracle;

    const app::RunResult r = command == "reproduce"
                                 ? app::run_reproduce(config.empty() ? app::default_config_dir() : std::filesystem::path(config), opts)
                                 : app::run_file(config, command, opts);
    if (!r.diagnostic.empty()) std::cerr << r.diagnostic << (r.diagnostic.back() == '\n' ? "" : "\n");
    if (r.report.is_null()) return r.exit_code;

    const auto dir = app::resolve_out_dir(out ? std::optional<std::filesystem::path>(*out) : std::nullopt);
    if (!dir) {
        std::cout << app::dump_report(r.report);
        return r.exit_code;
    }
    try {
        for (const auto& p : app::write_outputs(r, *dir, r.stem)) std::cerr << "wrote " << p.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return app::kExitConfig;
    }
    return r.exit_code;
}
