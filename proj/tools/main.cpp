#include "ccclab/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"ccclab: current-current correlation measure of random lattice operators"};
    app.set_version_flag("--version", std::string(ccclab::version));
    app.require_subcommand(1);

    std::string config;
    std::optional<std::string> output;
    std::optional<int> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> cache;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--output", output, "output directory");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "master seed override");
        sub->add_option("--cache", cache, "eigendata cache: off, read, read_write")
            ->check(CLI::IsMember({"off", "read", "read_write"}));
    };
    auto* run = app.add_subcommand("run", "run every configured experiment");
    auto* verify = app.add_subcommand("verify", "check exact identities on the configured realizations");
    add_common(run);
    add_common(verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ccclab::exit_schema;
    }

    ccclab::Overrides o;
    o.output = output;
    o.workers = workers;
    o.seed = seed;
    if (cache) o.cache = ccclab::parse_cache_policy(*cache);

    if (run->parsed()) return ccclab::run_command(config, o, std::cout, std::cerr);
    return ccclab::verify_command(config, o, std::cout, std::cerr);
}
