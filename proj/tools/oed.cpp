#include "oed/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Optimal experimental design on finite design spaces"};
    app.require_subcommand(1);

    oed::cli::CommandOptions opts;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides output.directory)");
        sub->add_option("--seed", seed, "random seed (overrides algorithm.seed)");
        sub->add_option("--threads", threads, "threads for building atoms")->check(CLI::PositiveNumber);
    };

    std::string design, trace;
    auto* run = app.add_subcommand("run", "run the configured algorithm and write design and trace");
    add_common(run);
    auto* certify = app.add_subcommand("certify", "report criterion value and optimality certificate of a design");
    add_common(certify);
    certify->add_option("--design", design, "design file (JSON or CSV)")->required()->check(CLI::ExistingFile);
    auto* rates = app.add_subcommand("rates", "check a trace against the convergence-rate bounds");
    add_common(rates);
    rates->add_option("--trace", trace, "trace CSV from run")->required()->check(CLI::ExistingFile);
    auto* reduce = app.add_subcommand("reduce", "reduce the support of a design");
    add_common(reduce);
    reduce->add_option("--design", design, "design file (JSON or CSV)")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--out")) opts.out = out;
        if (sub->count("--seed")) opts.seed = seed;
        if (sub->count("--threads")) opts.threads = threads;
    }
    if (!design.empty()) opts.design = design;
    if (!trace.empty()) opts.trace = trace;

    if (run->parsed()) return oed::cli::cmd_run(opts, std::cout, std::cerr);
    if (certify->parsed()) return oed::cli::cmd_certify(opts, std::cout, std::cerr);
    if (rates->parsed()) return oed::cli::cmd_rates(opts, std::cout, std::cerr);
    return oed::cli::cmd_reduce(opts, std::cout, std::cerr);
}
