#include "matherlab/cli/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace matherlab;

int main(int argc, char** argv) {
    CLI::App app{"Numerical Mather theory experiments"};
    app.set_version_flag("--version", std::string(cli::version()));
    std::string scenario, config, out;
    long long seed = -1;
    int threads = 1;
    bool check = false, quiet = false;
    app.add_option("scenario", scenario, "Scenario to run")
        ->required()
        ->check(CLI::IsMember(cli::scenario_names()));
    app.add_option("--config", config, "JSON configuration, or a manifest of an earlier run")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--out", out, "Output directory");
    app.add_option("--seed", seed, "Seed of the random generator (overrides the configuration)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--check", check, "Validate the configuration and exit");
    app.add_flag("-q,--quiet", quiet, "Suppress warnings on stderr");
    CLI11_PARSE(app, argc, argv);
    if (!check && out.empty()) {
        std::cerr << "matherlab: --out is required\n";
        return 2;
    }
    if (quiet) set_warnings_enabled(false);

    const auto s = *cli::parse_scenario(scenario);
    try {
        auto cfg = cli::Config::load(config);
        if (check) {
            auto diags = cli::validate(cfg, s);
            int errors = 0;
            for (const auto& d : diags) {
                std::cerr << config << ": " << d.format() << '\n';
                errors += d.level == cli::Diagnostic::Level::error;
            }
            if (errors == 0) std::cout << "configuration ok\n";
            return errors ? 2 : 0;
        }
        cli::RunOptions opt;
        opt.out = out;
        opt.threads = threads;
        opt.config_path = config;
        if (seed >= 0)
            opt.seed = static_cast<unsigned>(seed);
        else if (cfg.manifest_seed)
            opt.seed = *cfg.manifest_seed;
        else if (cfg.doc.contains("seed") && cfg.doc["seed"].is_number_integer())
            opt.seed = cfg.doc["seed"].get<unsigned>();
        auto res = cli::run(s, cfg, opt);
        std::cout << scenario << ": " << res.summary.dump() << '\n';
        for (const auto& f : res.files) std::cout << "  wrote " << (opt.out / f).string() << '\n';
        return 0;
    } catch (const cli::ConfigError& e) {
        for (const auto& d : e.diagnostics()) std::cerr << config << ": " << d.format() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "matherlab: " << scenario << " failed: " << e.what() << '\n';
        return 1;
    }
}
