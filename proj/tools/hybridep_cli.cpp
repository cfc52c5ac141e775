// hybridep: command-line driver.
//
//   hybridep <spectrum|ep-scan|cat-locus|evolve|wigner|hp-compare> --config run.ini
//            [--out DIR] [--workers N] [--normalization unit|trace]
//
// Exit codes: 0 ok, 2 config error, 3 numerical failure.

#include "hybridep/commands.hpp"
#include "hybridep/parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
    using namespace hybridep;

    CLI::App app{"Flux-qubit / NV-ensemble non-Hermitian simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = ".";
    int workers = default_workers();
    std::string normalization = "unit";
    app.add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--normalization", normalization, "state normalization for survival probability")
        ->check(CLI::IsMember({"unit", "trace"}));

    for (const char* name : {"spectrum", "ep-scan", "cat-locus", "evolve", "wigner", "hp-compare"}) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        std::ifstream in(config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        RunConfig cfg = parse_config(buf.str(), section_for_command(sub));
        cfg.out_dir = out_dir;
        cfg.workers = workers;
        cfg.normalization = normalization == "trace" ? Normalization::trace : Normalization::unit;
        for (const auto& f : run_command(cfg)) std::cout << f.string() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << sub << ": config error: " << e.what() << '\n';
        return 2;
    } catch (const ModelError& e) {
        std::cerr << sub << ": config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << sub << ": config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << sub << ": numerical failure: " << e.what() << '\n';
        return 3;
    }
}
