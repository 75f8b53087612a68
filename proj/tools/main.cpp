#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "riskydates/cli.hpp"
#include "riskydates/error.hpp"

int main(int argc, char** argv) {
    using namespace riskydates;

    CLI::App app{"Simulate and verify defaultable term structures with risky dates"};
    app.require_subcommand(1);

    std::string scenario;
    CommandOptions opts;
    std::string break_condition;
    std::size_t paths = 0, steps = 0;
    std::uint64_t seed = 0;
    double tolerance_z = 0.0;

    auto* validate = app.add_subcommand("validate", "Parse and check a scenario file");
    validate->add_option("scenario", scenario, "Scenario file")->required();

    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("scenario", scenario, "Scenario file")->required();
        sub->add_option("--paths", paths, "Number of Monte Carlo paths");
        sub->add_option("--seed", seed, "Master seed");
        sub->add_option("--steps", steps, "Time steps on [0, horizon]");
        sub->add_option("--out", opts.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--workers", opts.workers, "Worker threads (default: RISKYDATES_WORKERS or all cores)");
        sub->add_option("--tolerance-z", tolerance_z, "z threshold before the mesh-size widening");
    };
    auto* simulate = app.add_subcommand("simulate", "Simulate and write mean surfaces");
    add_run_flags(simulate);
    auto* verify = app.add_subcommand("verify", "Run the martingale, jump and condition checks");
    add_run_flags(verify);
    verify->add_option("--break-condition", break_condition, "Inject a violation of condition i, ii or iv")
        ->check(CLI::IsMember({"i", "ii", "iv"}));
    verify->add_option("--magnitude", opts.magnitude, "Size of the injected violation");

    CLI11_PARSE(app, argc, argv);

    auto* used = app.get_subcommands().front();
    if (used == validate) return cmd_validate(scenario, std::cout, std::cerr);

    if (used->count("--paths")) opts.paths = paths;
    if (used->count("--seed")) opts.seed = seed;
    if (used->count("--steps")) opts.steps = steps;
    if (used->count("--tolerance-z")) opts.tolerance_z = tolerance_z;

    if (used == simulate) return cmd_simulate(scenario, opts, std::cout, std::cerr);
    opts.which = parse_break(break_condition);
    return cmd_verify(scenario, opts, std::cout, std::cerr);
}
